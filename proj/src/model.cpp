#include "pfan/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "pfan/errors.hpp"

namespace pfan {

void ModelConfig::validate() const {
    if (input_dim <= 0) throw ConfigError("input_dim must be positive");
    if (class_count <= 1) throw ConfigError("class_count must be at least 2");
    if (hidden_dim <= 0 || feature_dim <= 0 || disc_hidden <= 0)
        throw ConfigError("layer widths must be positive");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
}

PfanModel::PfanModel(const ModelConfig& config)
    : cfg(config),
      g1(config.input_dim, config.hidden_dim),
      g2(config.hidden_dim, config.feature_dim),
      f(config.feature_dim, config.class_count),
      d1(config.feature_dim, config.disc_hidden),
      d2(config.disc_hidden, 1) {
    cfg.validate();
}

void PfanModel::init_params(Rng& rng) {
    // Hidden layers get Glorot noise; the classifier and discriminator output
    // layers start at zero so both heads begin exactly at chance (logits 0).
    g1.init_glorot(rng);
    g2.init_glorot(rng);
    f.init_zero();
    d1.init_glorot(rng);
    d2.init_zero();
}

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

FeatureTrace PfanModel::forward_features_traced(const Matrix& x) const {
    if (x.cols != cfg.input_dim)
        throw DimensionError("input has " + std::to_string(x.cols) + " columns, model expects " +
                             std::to_string(cfg.input_dim));
    FeatureTrace t;
    t.input = x;
    t.h_pre = affine_forward(x, g1);
    t.h = relu_forward(t.h_pre);
    t.feat_pre = affine_forward(t.h, g2);
    t.feat = relu_forward(t.feat_pre);
    return t;
}

Matrix PfanModel::forward_features(const Matrix& x) const {
    return forward_features_traced(x).feat;
}

Matrix PfanModel::logits(const Matrix& features) const {
    return affine_forward(features, f);
}

Matrix PfanModel::classify(const Matrix& features, double temperature) const {
    return softmax_temperature(logits(features), temperature);
}

DiscTrace PfanModel::forward_disc_traced(const Matrix& features) const {
    DiscTrace t;
    t.input = features;
    t.h_pre = affine_forward(features, d1);
    t.h = relu_forward(t.h_pre);
    t.logit = affine_forward(t.h, d2);
    return t;
}

Matrix PfanModel::discriminate(const Matrix& features) const {
    Matrix out = forward_disc_traced(features).logit;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

std::vector<int> PfanModel::predict(const Matrix& x) const {
    Matrix z = logits(forward_features(x));
    std::vector<int> out(static_cast<std::size_t>(z.rows));
    for (int i = 0; i < z.rows; ++i) {
        const double* row = z.row_ptr(i);
        int best = 0;
        for (int c = 1; c < z.cols; ++c)
            if (row[c] > row[best]) best = c;
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

Matrix PfanModel::backward_features(const FeatureTrace& trace, const Matrix& dfeat) {
    Matrix dfeat_pre = relu_backward(trace.feat_pre, dfeat);
    Matrix dh = affine_backward(trace.h, g2, dfeat_pre);
    Matrix dh_pre = relu_backward(trace.h_pre, dh);
    return affine_backward(trace.input, g1, dh_pre);
}

Matrix PfanModel::backward_logits(const Matrix& features, const Matrix& dlogits) {
    return affine_backward(features, f, dlogits);
}

Matrix PfanModel::backward_disc(const DiscTrace& trace, const Matrix& dlogit) {
    Matrix dh = affine_backward(trace.h, d2, dlogit);
    Matrix dh_pre = relu_backward(trace.h_pre, dh);
    return affine_backward(trace.input, d1, dh_pre);
}

// ---------------------------------------------------------------------------
// parameter groups
// ---------------------------------------------------------------------------

std::vector<LayerParams*> PfanModel::all_layers() { return {&g1, &g2, &f, &d1, &d2}; }
std::vector<LayerParams*> PfanModel::feature_layers() { return {&g1, &g2}; }
std::vector<LayerParams*> PfanModel::classifier_layers() { return {&f}; }
std::vector<LayerParams*> PfanModel::discriminator_layers() { return {&d1, &d2}; }

void PfanModel::zero_grad() {
    for (LayerParams* p : all_layers()) p->zero_grad();
}

void PfanModel::zero_momentum() {
    for (LayerParams* p : all_layers()) p->zero_momentum();
}

// ---------------------------------------------------------------------------
// gradient reversal and discriminator loss
// ---------------------------------------------------------------------------

Matrix grl_backward(const Matrix& grad_features, double lambda) {
    if (lambda < 0.0) throw ParameterError("reversal strength must be >= 0");
    if (lambda == 0.0) return Matrix(grad_features.rows, grad_features.cols);
    Matrix out = grad_features;
    scale_inplace(out, -lambda);
    return out;
}

namespace {
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
}  // namespace

double disc_bce_loss(const Matrix& logit, const std::vector<double>& targets, Matrix* dlogit) {
    if (logit.cols != 1) throw DimensionError("discriminator logits must be a single column");
    if (static_cast<std::size_t>(logit.rows) != targets.size())
        throw DimensionError("target count does not match logit rows");
    int n = logit.rows;
    if (n == 0) throw DimensionError("empty batch in discriminator loss");
    if (dlogit) *dlogit = Matrix(n, 1);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = logit.at(i, 0);
        double y = targets[static_cast<std::size_t>(i)];
        total += y * softplus(-z) + (1.0 - y) * softplus(z);
        if (dlogit) dlogit->at(i, 0) = (1.0 / (1.0 + std::exp(-z)) - y) / n;
    }
    return total / n;
}

// ---------------------------------------------------------------------------
// snapshots
// ---------------------------------------------------------------------------

namespace {

constexpr char kSnapshotMagic[8] = {'P', 'F', 'A', 'N', 'S', 'N', 'A', 'P'};
constexpr std::uint32_t kSnapshotVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    void raw(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    std::size_t pos() const { return pos_; }
    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size())
            throw FormatError("snapshot truncated", static_cast<long long>(bytes_.size()));
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

void put_layer(std::vector<std::uint8_t>& out, const LayerParams& p) {
    for (double v : p.weight.data) put_f64(out, v);
    for (double v : p.bias) put_f64(out, v);
    for (double v : p.momentum_weight.data) put_f64(out, v);
    for (double v : p.momentum_bias) put_f64(out, v);
}

void read_layer(ByteReader& r, LayerParams& p) {
    for (double& v : p.weight.data) v = r.f64();
    for (double& v : p.bias) v = r.f64();
    for (double& v : p.momentum_weight.data) v = r.f64();
    for (double& v : p.momentum_bias) v = r.f64();
}

}  // namespace

void save_snapshot(const std::string& path, const PfanModel& model, int step_m) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kSnapshotMagic, kSnapshotMagic + 8);
    put_u32(out, kSnapshotVersion);
    put_u32(out, static_cast<std::uint32_t>(step_m));

    const PfanModel& m = model;
    const LayerParams* layers[] = {&m.g1, &m.g2, &m.f, &m.d1, &m.d2};
    put_u32(out, 5);
    for (const LayerParams* p : layers) {
        put_u32(out, static_cast<std::uint32_t>(p->in_dim()));
        put_u32(out, static_cast<std::uint32_t>(p->out_dim()));
    }
    for (const LayerParams* p : layers) put_layer(out, *p);

    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write snapshot: " + path);
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw DataError("short write on snapshot: " + path);
}

int load_snapshot(const std::string& path, PfanModel& model) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot open snapshot: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                    std::istreambuf_iterator<char>());
    ByteReader r(bytes);

    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kSnapshotMagic, 8) != 0) throw FormatError("not a snapshot file", 0);
    std::uint32_t version = r.u32();
    if (version != kSnapshotVersion)
        throw FormatError("unsupported snapshot version " + std::to_string(version), 8);
    int step_m = static_cast<int>(r.u32());

    std::uint32_t layer_count = r.u32();
    if (layer_count != 5)
        throw FormatError("snapshot holds " + std::to_string(layer_count) + " layers, expected 5",
                          static_cast<long long>(r.pos()) - 4);

    LayerParams* layers[] = {&model.g1, &model.g2, &model.f, &model.d1, &model.d2};
    for (LayerParams* p : layers) {
        long long at = static_cast<long long>(r.pos());
        std::uint32_t in = r.u32();
        std::uint32_t out = r.u32();
        if (static_cast<int>(in) != p->in_dim() || static_cast<int>(out) != p->out_dim())
            throw FormatError("snapshot layer shape " + std::to_string(in) + "x" +
                                  std::to_string(out) + " does not match model " +
                                  std::to_string(p->in_dim()) + "x" + std::to_string(p->out_dim()),
                              at);
    }
    for (LayerParams* p : layers) read_layer(r, *p);
    if (!r.exhausted())
        throw FormatError("trailing bytes after snapshot payload", static_cast<long long>(r.pos()));
    for (LayerParams* p : layers) p->zero_grad();
    return step_m;
}

}  // namespace pfan
