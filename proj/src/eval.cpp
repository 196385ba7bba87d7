#include "gazekit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace gazekit {

namespace {

constexpr double kPi = std::numbers::pi;

// Runs f(i) for every index once; results land in per-index slots so the
// reduction that follows is independent of thread count.
template <typename F>
void parallel_for(std::size_t n, int n_threads, F&& f) {
    if (n_threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) {
            f(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            f(i);
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min<int>(n_threads, static_cast<int>(n));
    pool.reserve(count);
    for (int t = 0; t < count; ++t) {
        pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
        t.join();
    }
}

std::vector<ModelOutput> predict_all(const Predictor& model, const std::vector<Sample>& dataset,
                                     int n_threads) {
    std::vector<ModelOutput> out(dataset.size());
    parallel_for(dataset.size(), n_threads, [&](std::size_t i) { out[i] = model.predict(dataset[i].image); });
    return out;
}

const char* decoder_name(Decoder d) {
    switch (d) {
        case Decoder::sc:
            return "sc";
        case Decoder::wsc:
            return "wsc";
        case Decoder::raw:
            return "raw";
    }
    return "?";
}

EvalReport bin_errors(const std::vector<Sample>& dataset, const std::vector<double>& errors,
                      Decoder decoder) {
    EvalReport rep;
    rep.decoder = decoder_name(decoder);
    rep.n = dataset.size();
    double overall = 0.0, back = 0.0, front180 = 0.0, front40 = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const double yaw = dataset[i].label.yaw;
        overall += errors[i];
        if (is_back(yaw)) {
            back += errors[i];
            ++rep.back.count;
        } else {
            front180 += errors[i];
            ++rep.front180.count;
            if (is_front40(yaw)) {
                front40 += errors[i];
                ++rep.front40.count;
            }
        }
    }
    auto mean = [](double sum, std::size_t count) {
        return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
    };
    rep.overall_mean_rad = mean(overall, rep.n);
    rep.back.mean_rad = mean(back, rep.back.count);
    rep.front180.mean_rad = mean(front180, rep.front180.count);
    rep.front40.mean_rad = mean(front40, rep.front40.count);
    return rep;
}

std::vector<double> decode_errors(const std::vector<Sample>& dataset,
                                  const std::vector<ModelOutput>& outputs, Decoder decoder) {
    std::vector<double> errors(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        errors[i] = angular_error(predict_angles(outputs[i], decoder), dataset[i].label);
    }
    return errors;
}

}  // namespace

EvalReport evaluate(const Predictor& model, const std::vector<Sample>& dataset, Decoder decoder,
                    int n_threads) {
    if (dataset.empty()) {
        throw std::invalid_argument("evaluate: empty dataset");
    }
    const std::vector<ModelOutput> outputs = predict_all(model, dataset, n_threads);
    return bin_errors(dataset, decode_errors(dataset, outputs, decoder), decoder);
}

DecoderComparison compare_decoders(const Predictor& model, const std::vector<Sample>& dataset,
                                   int n_threads) {
    if (dataset.empty()) {
        throw std::invalid_argument("compare_decoders: empty dataset");
    }
    const std::vector<ModelOutput> outputs = predict_all(model, dataset, n_threads);
    if (outputs.front().mode != HeadMode::encoded) {
        throw std::invalid_argument("compare_decoders: needs an encoded head");
    }
    DecoderComparison cmp;
    cmp.sc = bin_errors(dataset, decode_errors(dataset, outputs, Decoder::sc), Decoder::sc);
    cmp.wsc = bin_errors(dataset, decode_errors(dataset, outputs, Decoder::wsc), Decoder::wsc);
    return cmp;
}

PerturbationReport scale_robustness(const Predictor& model, const std::vector<Sample>& dataset,
                                    Decoder decoder, const std::vector<int>& magnifications,
                                    int n_threads) {
    for (int c : magnifications) {
        if (c <= 0 || c % 2 != 0) {
            throw std::invalid_argument("scale_robustness: magnifications must be positive and even");
        }
    }
    std::vector<Sample> front;
    for (const Sample& s : dataset) {
        if (is_front180(s.label.yaw)) {
            front.push_back(s);
        }
    }
    if (front.empty()) {
        throw std::invalid_argument("scale_robustness: no front-180 samples");
    }

    auto mean_error = [&](const std::vector<Sample>& set) {
        return evaluate(model, set, decoder, n_threads).overall_mean_rad;
    };

    PerturbationReport rep;
    rep.n = front.size();
    rep.baseline_mean_rad = mean_error(front);
    for (int c : magnifications) {
        std::vector<Sample> zoom_in = front;
        std::vector<Sample> zoom_out = front;
        for (std::size_t i = 0; i < front.size(); ++i) {
            zoom_in[i].image = perturb_zoom_in(front[i].image, c);
            zoom_out[i].image = perturb_zoom_out(front[i].image, c);
        }
        const double avg = 0.5 * (mean_error(zoom_in) + mean_error(zoom_out));
        rep.magnifications.push_back(c);
        rep.pct_increase.push_back(avg == rep.baseline_mean_rad
                                       ? 0.0
                                       : 100.0 * (avg - rep.baseline_mean_rad) / rep.baseline_mean_rad);
    }
    return rep;
}

std::vector<MetaGroupRow> group_by_meta(const Predictor& model, const std::vector<Sample>& dataset,
                                        Decoder decoder, const std::string& key, int n_bins,
                                        int n_threads) {
    if (dataset.empty()) {
        throw std::invalid_argument("group_by_meta: empty dataset");
    }
    if (n_bins < 1) {
        throw std::invalid_argument("group_by_meta: n_bins must be >= 1");
    }
    std::vector<double> values(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto it = dataset[i].meta.find(key);
        if (it == dataset[i].meta.end()) {
            throw std::runtime_error("group_by_meta: sample " + std::to_string(i) + " lacks meta key '" +
                                     key + "'");
        }
        values[i] = it->second;
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const double width = (hi - lo) / n_bins;

    const std::vector<ModelOutput> outputs = predict_all(model, dataset, n_threads);
    const std::vector<double> errors = decode_errors(dataset, outputs, decoder);

    std::vector<MetaGroupRow> rows(n_bins);
    std::vector<double> sums(n_bins, 0.0);
    for (int b = 0; b < n_bins; ++b) {
        rows[b].lo = lo + b * width;
        rows[b].hi = b + 1 == n_bins ? hi : lo + (b + 1) * width;
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        int b = width > 0.0 ? static_cast<int>((values[i] - lo) / width) : 0;
        b = std::clamp(b, 0, n_bins - 1);
        sums[b] += errors[i];
        ++rows[b].count;
    }
    for (int b = 0; b < n_bins; ++b) {
        rows[b].mean_rad = rows[b].count == 0 ? std::numeric_limits<double>::quiet_NaN()
                                              : sums[b] / static_cast<double>(rows[b].count);
    }
    return rows;
}

YawHistogram yaw_histogram(const std::vector<YawEstimates>& estimates,
                           const std::vector<double>& ground_truth_yaw) {
    if (estimates.empty() || estimates.size() != ground_truth_yaw.size()) {
        throw std::invalid_argument("yaw_histogram: estimate/truth size mismatch or empty input");
    }
    YawHistogram h;
    h.bin_lo_rad.resize(YawHistogram::kBins);
    h.theta_s.assign(YawHistogram::kBins, 0);
    h.theta_c.assign(YawHistogram::kBins, 0);
    h.theta_g.assign(YawHistogram::kBins, 0);
    const double width = 2.0 * kPi / YawHistogram::kBins;
    for (int b = 0; b < YawHistogram::kBins; ++b) {
        h.bin_lo_rad[b] = -kPi + b * width;
    }
    auto bin_of = [&](double a) {
        const int b = static_cast<int>(std::floor((a + kPi) / width));
        return std::clamp(b, 0, YawHistogram::kBins - 1);  // +pi falls into the last bin
    };
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        ++h.theta_s[bin_of(estimates[i].theta_s)];
        ++h.theta_c[bin_of(estimates[i].theta_c)];
        ++h.theta_g[bin_of(ground_truth_yaw[i])];
    }
    return h;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open output file " + path.string());
    }
    out.precision(17);
    return out;
}

nlohmann::json bin_json(const BinStats& b) {
    return {{"mean_rad", b.mean_rad}, {"count", b.count}};
}

nlohmann::json report_json(const EvalReport& r) {
    return {{"decoder", r.decoder},
            {"n", r.n},
            {"overall_mean_rad", r.overall_mean_rad},
            {"bins",
             {{"back", bin_json(r.back)}, {"front180", bin_json(r.front180)}, {"front40", bin_json(r.front40)}}}};
}

}  // namespace

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "bin,mean_angular_error_rad,count\n";
    out << "all360," << report.overall_mean_rad << ',' << report.n << '\n';
    out << "front180," << report.front180.mean_rad << ',' << report.front180.count << '\n';
    out << "front40," << report.front40.mean_rad << ',' << report.front40.count << '\n';
    out << "back," << report.back.mean_rad << ',' << report.back.count << '\n';
}

void write_groups_csv(const std::vector<MetaGroupRow>& rows, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "bin_lo,bin_hi,mean_angular_error_rad,count\n";
    for (const MetaGroupRow& r : rows) {
        out << r.lo << ',' << r.hi << ',' << r.mean_rad << ',' << r.count << '\n';
    }
}

void write_perturbation_csv(const PerturbationReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "magnification,pct_increase\n";
    out << "0,0\n";
    for (std::size_t i = 0; i < report.magnifications.size(); ++i) {
        out << report.magnifications[i] << ',' << report.pct_increase[i] << '\n';
    }
}

void write_histogram_csv(const YawHistogram& hist, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    const double width = 2.0 * kPi / YawHistogram::kBins;
    out << "bin_lo_rad,bin_hi_rad,theta_s,theta_c,theta_g\n";
    for (int b = 0; b < YawHistogram::kBins; ++b) {
        out << hist.bin_lo_rad[b] << ',' << hist.bin_lo_rad[b] + width << ',' << hist.theta_s[b] << ','
            << hist.theta_c[b] << ',' << hist.theta_g[b] << '\n';
    }
}

void write_eval_json(const std::filesystem::path& path, const EvalReport* report,
                     const DecoderComparison* decoders, const std::vector<MetaGroupRow>* groups,
                     const PerturbationReport* perturbation) {
    nlohmann::json doc;
    if (report) {
        doc["report"] = report_json(*report);
    }
    if (decoders) {
        doc["decoders"] = {{"sc", report_json(decoders->sc)}, {"wsc", report_json(decoders->wsc)}};
    }
    if (groups) {
        nlohmann::json arr = nlohmann::json::array();
        for (const MetaGroupRow& r : *groups) {
            arr.push_back({{"lo", r.lo}, {"hi", r.hi}, {"mean_rad", r.mean_rad}, {"count", r.count}});
        }
        doc["groups"] = arr;
    }
    if (perturbation) {
        nlohmann::json rows = nlohmann::json::array();
        rows.push_back({{"magnification", 0}, {"pct_increase", 0.0}});
        for (std::size_t i = 0; i < perturbation->magnifications.size(); ++i) {
            rows.push_back({{"magnification", perturbation->magnifications[i]},
                            {"pct_increase", perturbation->pct_increase[i]}});
        }
        doc["perturbation"] = {{"baseline_mean_rad", perturbation->baseline_mean_rad},
                               {"n_front180", perturbation->n},
                               {"rows", rows}};
    }
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
}

}  // namespace gazekit
