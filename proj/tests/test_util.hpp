#pragma once

#include <cmath>
#include <filesystem>
#include <ostream>
#include <string>

// Absolute-tolerance comparator; the vendored doctest Approx only does
// relative epsilon.
struct AbsApprox {
    double target;
    double tol;
    friend bool operator==(double v, const AbsApprox& a) { return std::fabs(v - a.target) <= a.tol; }
    friend bool operator==(const AbsApprox& a, double v) { return v == a; }
    friend std::ostream& operator<<(std::ostream& os, const AbsApprox& a) {
        return os << a.target << " +- " << a.tol;
    }
};

inline AbsApprox approx_abs(double target, double tol) { return AbsApprox{target, tol}; }

// Unique scratch directory, removed on destruction.
struct TempDir {
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("gazekit_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this) % 100000) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path path;
};
