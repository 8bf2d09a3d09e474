#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace selfheal::surrogate {

/// Feature order: sigma (cm), gamma (cm^2), t (s).
using Features = std::array<double, 3>;
constexpr std::size_t kFeatureCount = 3;

struct Dataset {
    std::vector<Features> features;
    std::vector<int> labels;  // 0 or 1

    std::size_t size() const { return labels.size(); }
    Dataset subset(std::span<const std::size_t> indices) const;

    /// Throws InvalidDataset on size mismatch, non-finite features or labels
    /// outside {0, 1}.
    void validate() const;
};

/// Reads the `sigma,gamma,t,H` CSV written by the dataset generator.
Dataset read_dataset_csv(std::istream& is);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

/// Seeded uniform permutation cut 60/20/20. Throws InvalidDataset for fewer
/// than five rows.
SplitIndices split(std::size_t rows, std::uint64_t seed);

/// Per-feature z-scoring fitted on training rows only.
struct Standardizer {
    Features mean{};
    Features scale{1.0, 1.0, 1.0};

    static Standardizer fit(std::span<const Features> rows);
    Features apply(const Features& x) const;
};

enum class Variant { KNN, GNB, LOGREG, LINSVM, MLP };

const char* to_string(Variant v);
Variant parse_variant(const std::string& name);

struct Hyperparameters {
    int knn_k = 5;

    int logreg_epochs = 300;
    double logreg_learning_rate = 0.5;

    double svm_lambda = 1e-4;
    int svm_epochs = 20;
    double svm_eta0 = 0.1;

    int mlp_hidden = 32;
    double mlp_dropout = 0.2;
    double mlp_learning_rate = 1e-3;
    int mlp_batch = 32;
    int mlp_epochs = 100;

    std::uint64_t seed = 0;
};

struct KnnModel {
    int k = 5;
    std::vector<Features> points;  // standardized
    std::vector<int> labels;
    std::vector<std::uint32_t> tree;  // k-d tree over points, implicit layout
};

struct GaussianNbModel {
    std::array<double, 2> log_prior{};
    std::array<Features, 2> mean{};
    std::array<Features, 2> var{};
};

/// Shared by logistic regression (probability threshold 0.5) and the linear
/// SVM (margin threshold 0).
struct LinearModel {
    Features w{};
    double b = 0.0;
};

struct MlpModel {
    int hidden = 32;
    std::vector<double> w1, b1;  // hidden x 3
    std::vector<double> w2, b2;  // hidden x hidden
    std::vector<double> w3;      // hidden
    double b3 = 0.0;
};

using ModelParams = std::variant<KnnModel, GaussianNbModel, LinearModel, MlpModel>;

/// Trained binary classifier. Immutable after construction.
class Classifier {
public:
    Classifier(Variant variant, Standardizer scaler, ModelParams params);

    Variant variant() const { return variant_; }
    const Standardizer& standardizer() const { return scaler_; }
    const ModelParams& params() const { return params_; }

    /// Throws InvalidInput for non-finite features.
    int predict(const Features& raw) const;
    std::vector<int> predict(std::span<const Features> rows) const;

    /// P(H = 1) for LOGREG and MLP; margin for LINSVM; vote share for KNN;
    /// posterior for GNB.
    double score(const Features& raw) const;

private:
    Variant variant_;
    Standardizer scaler_;
    ModelParams params_;
};

/// Trains one variant. Validation rows drive best-epoch retention for the
/// MLP. Throws DegenerateLabels when the training labels hold one class and
/// TrainingDivergence on a non-finite loss.
Classifier fit(Variant variant, const Dataset& train, const Dataset& validation, const Hyperparameters& hp = {});

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    bool precision_undefined = false;
    bool recall_undefined = false;
};

struct Metrics {
    double accuracy = 0.0;
    // Support-weighted averages over both classes.
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::array<ClassMetrics, 2> per_class{};
    std::array<std::array<std::size_t, 2>, 2> confusion{};  // [truth][prediction]
};

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted);
Metrics evaluate(const Classifier& model, const Dataset& test);

/// Text envelope: version header, variant tag, standardization block,
/// parameter block and an FNV-1a checksum over everything before it.
std::string persist(const Classifier& model);
/// Throws CorruptModel naming the failing section.
Classifier load(const std::string& payload);

void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const std::string& model, const Metrics& m);

}  // namespace selfheal::surrogate
