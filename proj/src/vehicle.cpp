#include "bimp/vehicle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "bimp/errors.hpp"

namespace bimp {

void validate(const BicycleParams& params) {
  if (!(params.wheelbase > 0)) throw DomainError("BicycleParams: wheelbase must be positive");
  if (!(params.dt > 0)) throw DomainError("BicycleParams: dt must be positive");
  if (!(params.v_min <= params.v_max)) throw DomainError("BicycleParams: v_min must not exceed v_max");
}

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw FormatError(std::string("MlpModel: non-finite values in ") + what);
}

}  // namespace

MlpModel::MlpModel(std::vector<DenseLayer> layers, Activation activation, OutputConvention convention,
                   Eigen::VectorXd input_shift, Eigen::VectorXd input_scale, Eigen::VectorXd output_shift,
                   Eigen::VectorXd output_scale)
    : layers_(std::move(layers)),
      activation_(activation),
      convention_(convention),
      input_shift_(std::move(input_shift)),
      input_scale_(std::move(input_scale)),
      output_shift_(std::move(output_shift)),
      output_scale_(std::move(output_scale)) {
  if (layers_.empty()) throw FormatError("MlpModel: at least the output layer is required");
  if (input_scale_.size() != input_shift_.size() || output_scale_.size() != output_shift_.size()) {
    throw FormatError("MlpModel: normalization vectors have inconsistent sizes");
  }
  if (input_shift_.size() == 0 || output_shift_.size() == 0) throw FormatError("MlpModel: empty input or output");
  if (!(input_scale_.array() > 0).all() || !(output_scale_.array() > 0).all()) {
    throw FormatError("MlpModel: normalization scales must be positive");
  }
  check_finite(input_shift_, "input shift");
  check_finite(input_scale_, "input scale");
  check_finite(output_shift_, "output shift");
  check_finite(output_scale_, "output scale");
  Eigen::Index width = input_dim();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.weights.cols() != width || layer.bias.size() != layer.weights.rows()) {
      std::ostringstream os;
      os << "MlpModel: layer " << i << " has shape " << layer.weights.rows() << "x" << layer.weights.cols()
         << " but expects input width " << width;
      throw FormatError(os.str());
    }
    check_finite(layer.weights, "weights");
    check_finite(layer.bias, "bias");
    width = layer.weights.rows();
  }
  if (width != output_dim()) throw FormatError("MlpModel: last layer width does not match the output dimension");
  if (convention_ == OutputConvention::kResidual && input_dim() < output_dim()) {
    throw FormatError("MlpModel: residual convention needs the state as the leading inputs");
  }

  // tanh and relu are 1-Lipschitz.
  double bound = input_scale_.cwiseInverse().maxCoeff() * output_scale_.maxCoeff();
  for (const auto& layer : layers_) bound *= spectral_norm(layer.weights);
  if (!std::isfinite(bound)) throw FormatError("MlpModel: Lipschitz bound is not finite");
  lipschitz_ = bound;
}

MlpModel MlpModel::zeros(Eigen::Index input_dim, Eigen::Index output_dim, const std::vector<Eigen::Index>& hidden,
                         Activation activation, OutputConvention convention) {
  std::vector<DenseLayer> layers;
  Eigen::Index width = input_dim;
  for (Eigen::Index h : hidden) {
    layers.push_back({Eigen::MatrixXd::Zero(h, width), Eigen::VectorXd::Zero(h)});
    width = h;
  }
  layers.push_back({Eigen::MatrixXd::Zero(output_dim, width), Eigen::VectorXd::Zero(output_dim)});
  return MlpModel(std::move(layers), activation, convention, Eigen::VectorXd::Zero(input_dim),
                  Eigen::VectorXd::Ones(input_dim), Eigen::VectorXd::Zero(output_dim),
                  Eigen::VectorXd::Ones(output_dim));
}

std::vector<Eigen::Index> MlpModel::hidden_widths() const {
  std::vector<Eigen::Index> widths;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) widths.push_back(layers_[i].weights.rows());
  return widths;
}

Eigen::VectorXd MlpModel::evaluate(const Eigen::VectorXd& input) const {
  if (input.size() != input_dim()) throw DomainError("MlpModel::evaluate: input dimension mismatch");
  Eigen::VectorXd h = (input - input_shift_).cwiseQuotient(input_scale_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].weights * h + layers_[i].bias;
    if (i + 1 == layers_.size()) break;
    if (activation_ == Activation::kTanh) {
      h = h.array().tanh();
    } else {
      h = h.cwiseMax(0.0);
    }
  }
  return h.cwiseProduct(output_scale_) + output_shift_;
}

Eigen::VectorXd mlp_forward(const MlpModel& model, const Eigen::VectorXd& state, const Eigen::VectorXd& input) {
  if (state.size() + input.size() != model.input_dim()) {
    throw DomainError("mlp_forward: state and input do not match the network input dimension");
  }
  Eigen::VectorXd features(model.input_dim());
  features << state, input;
  Eigen::VectorXd out = model.evaluate(features);
  if (model.convention() == OutputConvention::kResidual) out += state.head(model.output_dim());
  return out;
}

// ---------------------------------------------------------------------------
// Weight file

namespace {

constexpr char kMagic[] = "MLPW1\n";
constexpr std::size_t kMagicSize = sizeof(kMagic) - 1;

void put_i32(std::string& out, std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xffU));
}

void put_f64(std::string& out, double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xffU));
}

void put_vector(std::string& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void require(std::size_t total) const {
    if (bytes_.size() < total) {
      std::ostringstream os;
      os << "weight file truncated: expected at least " << total << " bytes, found " << bytes_.size();
      throw FormatError(os.str());
    }
  }

  std::int32_t i32() {
    require(pos_ + 4);
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += 4;
    return static_cast<std::int32_t>(u);
  }

  double f64() {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += 8;
    return std::bit_cast<double>(u);
  }

  Eigen::VectorXd vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = f64();
    return v;
  }

  void skip(std::size_t n) { pos_ += n; }
  [[nodiscard]] std::size_t position() const { return pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_weights(const MlpModel& model) {
  std::string out(kMagic, kMagicSize);
  const auto hidden = model.hidden_widths();
  put_i32(out, static_cast<std::int32_t>(model.input_dim()));
  put_i32(out, static_cast<std::int32_t>(model.output_dim()));
  put_i32(out, static_cast<std::int32_t>(hidden.size()));
  for (auto w : hidden) put_i32(out, static_cast<std::int32_t>(w));
  put_i32(out, static_cast<std::int32_t>(model.activation()));
  put_i32(out, static_cast<std::int32_t>(model.convention()));
  put_vector(out, model.input_shift());
  put_vector(out, model.input_scale());
  put_vector(out, model.output_shift());
  put_vector(out, model.output_scale());
  for (const auto& layer : model.layers()) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) put_f64(out, layer.weights(r, c));
    }
    put_vector(out, layer.bias);
  }
  return out;
}

MlpModel parse_weights(const std::string& bytes) {
  if (bytes.size() < kMagicSize || bytes.compare(0, kMagicSize, kMagic) != 0) {
    throw FormatError("weight file: bad magic (expected \"MLPW1\\n\")");
  }
  Reader in(bytes);
  in.skip(kMagicSize);
  const std::int32_t input_dim = in.i32();
  const std::int32_t output_dim = in.i32();
  const std::int32_t hidden_count = in.i32();
  if (input_dim <= 0 || output_dim <= 0 || hidden_count < 0 || hidden_count > 64) {
    std::ostringstream os;
    os << "weight file: malformed header (input " << input_dim << ", output " << output_dim << ", hidden layers "
       << hidden_count << ")";
    throw FormatError(os.str());
  }
  std::vector<Eigen::Index> widths;
  widths.push_back(input_dim);
  for (std::int32_t i = 0; i < hidden_count; ++i) {
    const std::int32_t w = in.i32();
    if (w <= 0) throw FormatError("weight file: hidden width must be positive");
    widths.push_back(w);
  }
  widths.push_back(output_dim);
  const std::int32_t activation = in.i32();
  const std::int32_t convention = in.i32();
  if (activation != 0 && activation != 1) throw FormatError("weight file: unknown activation code");
  if (convention != 0 && convention != 1) throw FormatError("weight file: unknown output convention code");

  std::size_t doubles = 2 * static_cast<std::size_t>(input_dim) + 2 * static_cast<std::size_t>(output_dim);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    doubles += static_cast<std::size_t>(widths[i + 1]) * static_cast<std::size_t>(widths[i] + 1);
  }
  const std::size_t expected = in.position() + 8 * doubles;
  if (bytes.size() != expected) {
    std::ostringstream os;
    os << "weight file: expected " << expected << " bytes, found " << bytes.size();
    throw FormatError(os.str());
  }

  Eigen::VectorXd input_shift = in.vector(input_dim);
  Eigen::VectorXd input_scale = in.vector(input_dim);
  Eigen::VectorXd output_shift = in.vector(output_dim);
  Eigen::VectorXd output_scale = in.vector(output_dim);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DenseLayer layer{Eigen::MatrixXd(widths[i + 1], widths[i]), Eigen::VectorXd()};
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = in.f64();
    }
    layer.bias = in.vector(widths[i + 1]);
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers), static_cast<Activation>(activation), static_cast<OutputConvention>(convention),
                  std::move(input_shift), std::move(input_scale), std::move(output_shift), std::move(output_scale));
}

MlpModel load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open weight file " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_weights(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void save_weights(const MlpModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write weight file " + path);
  const std::string bytes = serialize_weights(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

namespace {

std::string manifest_path(const std::string& weights_path) {
  const auto slash = weights_path.find_last_of('/');
  const auto dot = weights_path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return weights_path.substr(0, dot) + ".manifest";
  }
  return weights_path + ".manifest";
}

}  // namespace

void write_manifest(const std::string& weights_path, const std::map<std::string, std::string>& entries) {
  std::ofstream out(manifest_path(weights_path), std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest for " + weights_path);
  for (const auto& [key, value] : entries) out << key << ": " << value << '\n';
}

std::map<std::string, std::string> read_manifest(const std::string& weights_path) {
  std::ifstream in(manifest_path(weights_path));
  if (!in) throw FormatError("cannot read manifest for " + weights_path);
  std::map<std::string, std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(": ");
    if (colon == std::string::npos) continue;
    entries[line.substr(0, colon)] = line.substr(colon + 2);
  }
  return entries;
}

// ---------------------------------------------------------------------------

VehicleDynamics bicycle_dynamics(const BicycleParams& params) {
  validate(params);
  VehicleDynamics d;
  d.name = "bicycle";
  d.step = [params](const Eigen::VectorXd& x, const Eigen::VectorXd& u) -> Eigen::VectorXd {
    if (x.size() != kStateDim || u.size() != kInputDim) throw DomainError("bicycle: state/input dimension mismatch");
    return bicycle_step<double>(Eigen::Vector4d(x), Eigen::Vector2d(u), params);
  };
  return d;
}

VehicleDynamics mlp_dynamics(MlpModel model, const BicycleParams& params) {
  validate(params);
  if (model.input_dim() != kStateDim + kInputDim || model.output_dim() != kStateDim) {
    throw FormatError("mlp dynamics: network must map 6 inputs to 4 outputs");
  }
  VehicleDynamics d;
  d.name = "mlp";
  d.step = [model = std::move(model), params](const Eigen::VectorXd& x, const Eigen::VectorXd& u) -> Eigen::VectorXd {
    Eigen::VectorXd next = mlp_forward(model, x, u);
    next[2] = wrap_angle(next[2]);
    next[3] = std::clamp(next[3], params.v_min, params.v_max);
    return next;
  };
  return d;
}

}  // namespace bimp
