#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gazekit/model.hpp"
#include "gazekit/synth.hpp"

namespace gazekit {

/// Anything that maps a head image to a head output. Lets the harness run
/// against trained models and test stubs alike.
class Predictor {
  public:
    virtual ~Predictor() = default;
    virtual ModelOutput predict(const Image& img) const = 0;
};

/// Multi-scale forward pass of a trained backbone under a fixed schedule.
class ModelPredictor : public Predictor {
  public:
    ModelPredictor(BackboneParams params, CropSchedule schedule)
        : params_(std::move(params)), schedule_(std::move(schedule)) {}

    ModelOutput predict(const Image& img) const override { return forward_msa(img, schedule_, params_); }
    const BackboneParams& params() const { return params_; }

  private:
    BackboneParams params_;
    CropSchedule schedule_;
};

struct BinStats {
    double mean_rad = 0.0;
    std::size_t count = 0;
};

/// Mean angular error overall and per yaw bin of the ground truth.
struct EvalReport {
    BinStats back;
    BinStats front180;
    BinStats front40;
    double overall_mean_rad = 0.0;
    std::string decoder;
    std::size_t n = 0;
};

EvalReport evaluate(const Predictor& model, const std::vector<Sample>& dataset, Decoder decoder,
                    int n_threads = 1);

/// sc and wsc decodes of one shared forward pass per sample.
struct DecoderComparison {
    EvalReport sc;
    EvalReport wsc;
};
DecoderComparison compare_decoders(const Predictor& model, const std::vector<Sample>& dataset,
                                   int n_threads = 1);

/// Percentage increase in mean angular error under zoom perturbations,
/// averaged over the zoom-in and zoom-out variants per magnification.
/// Only Front180 samples enter the study; magnifications must be even.
struct PerturbationReport {
    double baseline_mean_rad = 0.0;
    std::vector<int> magnifications;
    std::vector<double> pct_increase;  // parallel to magnifications; baseline c=0 is 0 by definition
    std::size_t n = 0;
};
PerturbationReport scale_robustness(const Predictor& model, const std::vector<Sample>& dataset,
                                    Decoder decoder, const std::vector<int>& magnifications,
                                    int n_threads = 1);

/// Equal-width binning of a metadata key over its observed range.
struct MetaGroupRow {
    double lo = 0.0;
    double hi = 0.0;
    double mean_rad = 0.0;
    std::size_t count = 0;
};
std::vector<MetaGroupRow> group_by_meta(const Predictor& model, const std::vector<Sample>& dataset,
                                        Decoder decoder, const std::string& key, int n_bins,
                                        int n_threads = 1);

/// 72 five-degree bins over [-pi, pi] for the two branch estimates and the
/// ground truth.
struct YawHistogram {
    static constexpr int kBins = 72;
    std::vector<double> bin_lo_rad;  // kBins entries; bin i covers [lo[i], lo[i] + 5deg)
    std::vector<std::size_t> theta_s;
    std::vector<std::size_t> theta_c;
    std::vector<std::size_t> theta_g;
};
YawHistogram yaw_histogram(const std::vector<YawEstimates>& estimates,
                           const std::vector<double>& ground_truth_yaw);

// Report files. CSV holds one row per bin; the JSON document nests whatever
// artifacts were produced (null pointers are skipped).
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
void write_groups_csv(const std::vector<MetaGroupRow>& rows, const std::filesystem::path& path);
void write_perturbation_csv(const PerturbationReport& report, const std::filesystem::path& path);
void write_histogram_csv(const YawHistogram& hist, const std::filesystem::path& path);
void write_eval_json(const std::filesystem::path& path, const EvalReport* report,
                     const DecoderComparison* decoders = nullptr,
                     const std::vector<MetaGroupRow>* groups = nullptr,
                     const PerturbationReport* perturbation = nullptr);

}  // namespace gazekit
