#ifndef PFAN_MODEL_HPP
#define PFAN_MODEL_HPP

#include <string>
#include <vector>

#include "pfan/layers.hpp"
#include "pfan/matrix.hpp"
#include "pfan/rng.hpp"

namespace pfan {

// ============================================================================
// Three-network model: feature extractor G, label predictor F, and a domain
// discriminator D sitting behind a gradient-reversal boundary.
// ============================================================================

struct ModelConfig {
    int input_dim = 2;
    int class_count = 4;
    int hidden_dim = 64;   // G's intermediate width
    int feature_dim = 16;  // D-dimensional embedding
    int disc_hidden = 32;  // discriminator's intermediate width
    double temperature = 1.8;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Cached activations from a feature-extractor forward pass, kept so the
// backward pass can be replayed without recomputation.
struct FeatureTrace {
    Matrix input;    // B x input_dim
    Matrix h_pre;    // B x hidden_dim, pre-activation
    Matrix h;        // B x hidden_dim, post-ReLU
    Matrix feat_pre; // B x feature_dim, pre-activation
    Matrix feat;     // B x feature_dim, post-ReLU (the embedding f = G(x))
};

// Cached activations from a discriminator forward pass.
struct DiscTrace {
    Matrix input;  // B x feature_dim (the features fed in)
    Matrix h_pre;  // B x disc_hidden
    Matrix h;      // B x disc_hidden, post-ReLU
    Matrix logit;  // B x 1, pre-sigmoid
};

class PfanModel {
public:
    ModelConfig cfg;
    LayerParams g1, g2;  // feature extractor (theta_g)
    LayerParams f;       // label predictor   (theta_f)
    LayerParams d1, d2;  // discriminator     (theta_d)

    explicit PfanModel(const ModelConfig& config);

    // Seeded Glorot-uniform weights, zero biases, cleared momentum.
    void init_params(Rng& rng);

    // --- forward ------------------------------------------------------------
    FeatureTrace forward_features_traced(const Matrix& x) const;
    Matrix forward_features(const Matrix& x) const;  // just the embedding

    Matrix logits(const Matrix& features) const;                    // B x C
    Matrix classify(const Matrix& features, double temperature) const;  // softmax probs

    DiscTrace forward_disc_traced(const Matrix& features) const;
    Matrix discriminate(const Matrix& features) const;  // sigmoid probs, B x 1

    // argmax over raw logits (temperature-invariant by construction)
    std::vector<int> predict(const Matrix& x) const;

    // --- backward (each accumulates into the layers' grad buffers) ----------
    // Pushes d(loss)/d(feat) through G; returns d(loss)/d(input).
    Matrix backward_features(const FeatureTrace& trace, const Matrix& dfeat);
    // Pushes d(loss)/d(logits) through F; returns d(loss)/d(feat).
    Matrix backward_logits(const Matrix& features, const Matrix& dlogits);
    // Pushes d(loss)/d(disc logit) through D; returns d(loss)/d(feat)
    // as it arrives at the reversal boundary (unscaled).
    Matrix backward_disc(const DiscTrace& trace, const Matrix& dlogit);

    // --- parameter groups ----------------------------------------------------
    std::vector<LayerParams*> all_layers();
    std::vector<LayerParams*> feature_layers();        // theta_g
    std::vector<LayerParams*> classifier_layers();     // theta_f
    std::vector<LayerParams*> discriminator_layers();  // theta_d

    void zero_grad();
    void zero_momentum();
};

// Gradient-reversal boundary: the gradient continuing into G is exactly
// -lambda times the incoming one.  lambda == 0 yields an all-zero matrix.
Matrix grl_backward(const Matrix& grad_features, double lambda);

// Mean binary cross-entropy of sigmoid(logit) against targets in {0,1},
// computed in the softplus form so large logits stay finite.  If dlogit is
// non-null it receives d(loss)/d(logit) = (sigmoid(z) - y) / B.
double disc_bce_loss(const Matrix& logit, const std::vector<double>& targets, Matrix* dlogit);

// ============================================================================
// Snapshots: versioned binary file holding every parameter, every momentum
// buffer, and the step index, bit-exactly.
// ============================================================================

void save_snapshot(const std::string& path, const PfanModel& model, int step_m);

// Loads into an existing model whose architecture must match the file's shape
// table; returns the stored step index.  Throws FormatError on a malformed or
// mismatched file.
int load_snapshot(const std::string& path, PfanModel& model);

}  // namespace pfan

#endif
