#include "logicforge/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "logicforge/errors.hpp"
#include "logicforge/rng.hpp"

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace logicforge::model {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.02;

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 6) throw InvalidConfig("vocab_size must be at least 6");
  if (d_model <= 0) throw InvalidConfig("d_model must be positive");
  if (n_layers <= 0) throw InvalidConfig("n_layers must be positive");
  if (n_heads <= 0) throw InvalidConfig("n_heads must be positive");
  if (d_model % n_heads != 0) throw InvalidConfig("d_model must be divisible by n_heads");
  if (context_window < 2) throw InvalidConfig("context_window must be at least 2");
}

namespace {

ModelParams allocate(const ModelConfig& config) {
  config.validate();
  const int d = config.d_model;
  ModelParams p;
  p.config = config;
  p.token_emb.resize(config.vocab_size, d);
  p.pos_emb.resize(config.context_window, d);
  p.layers.resize(static_cast<std::size_t>(config.n_layers));
  for (auto& layer : p.layers) {
    layer.ln1_scale.resize(d);
    layer.ln1_bias.resize(d);
    layer.wq.resize(d, d);
    layer.wk.resize(d, d);
    layer.wv.resize(d, d);
    layer.wo.resize(d, d);
    layer.ln2_scale.resize(d);
    layer.ln2_bias.resize(d);
    layer.w1.resize(d, 4 * d);
    layer.b1.resize(4 * d);
    layer.w2.resize(4 * d, d);
    layer.b2.resize(d);
  }
  p.final_scale.resize(d);
  p.final_bias.resize(d);
  p.w_head.resize(d, config.vocab_size);
  p.b_head.resize(config.vocab_size);
  return p;
}

enum class InitKind { Weight, Zero, One };

InitKind init_kind(const std::string& name) {
  if (name.ends_with("scale")) return InitKind::One;
  if (name.ends_with("bias") || name.ends_with("b1") || name.ends_with("b2") ||
      name.ends_with("b_head"))
    return InitKind::Zero;
  return InitKind::Weight;
}

}  // namespace

std::vector<ParamView> param_views(ModelParams& p) {
  std::vector<ParamView> views;
  auto add = [&](const std::string& name, auto& m) {
    views.push_back({name, m.data(), static_cast<std::size_t>(m.size())});
  };
  add("token_emb", p.token_emb);
  add("pos_emb", p.pos_emb);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string prefix = "layer" + std::to_string(i) + ".";
    add(prefix + "ln1_scale", l.ln1_scale);
    add(prefix + "ln1_bias", l.ln1_bias);
    add(prefix + "wq", l.wq);
    add(prefix + "wk", l.wk);
    add(prefix + "wv", l.wv);
    add(prefix + "wo", l.wo);
    add(prefix + "ln2_scale", l.ln2_scale);
    add(prefix + "ln2_bias", l.ln2_bias);
    add(prefix + "w1", l.w1);
    add(prefix + "b1", l.b1);
    add(prefix + "w2", l.w2);
    add(prefix + "b2", l.b2);
  }
  add("final_scale", p.final_scale);
  add("final_bias", p.final_bias);
  add("w_head", p.w_head);
  add("b_head", p.b_head);
  return views;
}

ModelParams init_params(const ModelConfig& config) {
  ModelParams p = allocate(config);
  Rng rng(derive_seed(config.seed, "model-init"));
  for (const auto& view : param_views(p)) {
    switch (init_kind(view.name)) {
      case InitKind::One:
        std::fill_n(view.data, view.size, 1.0);
        break;
      case InitKind::Zero:
        std::fill_n(view.data, view.size, 0.0);
        break;
      case InitKind::Weight:
        for (std::size_t i = 0; i < view.size; ++i) view.data[i] = rng.normal(0.0, kInitStd);
        break;
    }
  }
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams p = allocate(params.config);
  for (const auto& view : param_views(p)) std::fill_n(view.data, view.size, 0.0);
  return p;
}

namespace {

// y = xhat * scale + bias with xhat = (x - mean) * rstd, rowwise.
void layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& scale,
                const Eigen::VectorXd& bias, Eigen::MatrixXd& xhat, Eigen::VectorXd& rstd,
                Eigen::MatrixXd& y) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  xhat.resize(rows, cols);
  y.resize(rows, cols);
  rstd.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().sum() / static_cast<double>(cols);
    const double r = 1.0 / std::sqrt(var + kLnEps);
    rstd(i) = r;
    xhat.row(i) = (x.row(i).array() - mean) * r;
    y.row(i) = xhat.row(i).array() * scale.transpose().array() + bias.transpose().array();
  }
}

Eigen::MatrixXd renorm(const Eigen::MatrixXd& xhat, const Eigen::VectorXd& scale,
                       const Eigen::VectorXd& bias) {
  Eigen::MatrixXd y(xhat.rows(), xhat.cols());
  for (Eigen::Index i = 0; i < xhat.rows(); ++i)
    y.row(i) = xhat.row(i).array() * scale.transpose().array() + bias.transpose().array();
  return y;
}

// Backprop through layer norm given dy and the cached xhat / rstd.
void layer_norm_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& xhat,
                         const Eigen::VectorXd& rstd, const Eigen::VectorXd& scale,
                         Eigen::MatrixXd& dx, Eigen::VectorXd& dscale, Eigen::VectorXd& dbias) {
  const Eigen::Index rows = dy.rows(), cols = dy.cols();
  dx.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::RowVectorXd dxhat = dy.row(i).array() * scale.transpose().array();
    const double mean_dxhat = dxhat.mean();
    const double mean_dxhat_xhat = (dxhat.array() * xhat.row(i).array()).mean();
    dx.row(i) =
        rstd(i) * (dxhat.array() - mean_dxhat - xhat.row(i).array() * mean_dxhat_xhat);
  }
  dscale += (dy.array() * xhat.array()).colwise().sum().transpose().matrix();
  dbias += dy.colwise().sum().transpose();
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

}  // namespace

Forward forward(const ModelParams& params, const std::vector<int>& tokens) {
  const auto& cfg = params.config;
  const int L = static_cast<int>(tokens.size());
  if (L == 0) throw InvalidConfig("forward needs at least one token");
  if (L > cfg.context_window) throw SequenceTooLong(L, cfg.context_window);
  for (int t : tokens)
    if (t < 0 || t >= cfg.vocab_size) throw InvalidConfig("token id out of range");

  const int d = cfg.d_model;
  const int dh = d / cfg.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Forward fwd;
  fwd.layers.resize(params.layers.size());

  Eigen::MatrixXd x(L, d);
  for (int i = 0; i < L; ++i)
    x.row(i) = params.token_emb.row(tokens[static_cast<std::size_t>(i)]) + params.pos_emb.row(i);

  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& layer = params.layers[li];
    auto& cache = fwd.layers[li];
    cache.x_in = x;
    Eigen::MatrixXd y1;
    layer_norm(x, layer.ln1_scale, layer.ln1_bias, cache.xhat1, cache.rstd1, y1);

    cache.q = y1 * layer.wq;
    cache.k = y1 * layer.wk;
    cache.v = y1 * layer.wv;

    cache.ctx.setZero(L, d);
    cache.probs.assign(static_cast<std::size_t>(cfg.n_heads), Eigen::MatrixXd::Zero(L, L));
    for (int h = 0; h < cfg.n_heads; ++h) {
      auto qh = cache.q.middleCols(h * dh, dh);
      auto kh = cache.k.middleCols(h * dh, dh);
      auto vh = cache.v.middleCols(h * dh, dh);
      Eigen::MatrixXd& probs = cache.probs[static_cast<std::size_t>(h)];
      for (int i = 0; i < L; ++i) {
        Eigen::RowVectorXd scores = (qh.row(i) * kh.topRows(i + 1).transpose()) * scale;
        const double m = scores.maxCoeff();
        Eigen::RowVectorXd e = (scores.array() - m).exp();
        probs.row(i).head(i + 1) = e / e.sum();
      }
      cache.ctx.middleCols(h * dh, dh) = probs * vh;
    }

    cache.x_mid = x + cache.ctx * layer.wo;

    Eigen::MatrixXd y2;
    layer_norm(cache.x_mid, layer.ln2_scale, layer.ln2_bias, cache.xhat2, cache.rstd2, y2);
    cache.m1 = (y2 * layer.w1).rowwise() + layer.b1.transpose();
    cache.g = cache.m1.unaryExpr([](double v) { return gelu(v); });
    x = cache.x_mid + cache.g * layer.w2;
    x.rowwise() += layer.b2.transpose();
  }

  fwd.x_final = x;
  layer_norm(x, params.final_scale, params.final_bias, fwd.xhat_final, fwd.rstd_final,
             fwd.hidden);
  fwd.logits = (fwd.hidden * params.w_head).rowwise() + params.b_head.transpose();
  return fwd;
}

void backward(const ModelParams& params, const std::vector<int>& tokens, const Forward& fwd,
              const Eigen::MatrixXd& dlogits, ModelParams& grads) {
  const auto& cfg = params.config;
  const int L = static_cast<int>(tokens.size());
  const int d = cfg.d_model;
  const int dh = d / cfg.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (dlogits.rows() != L || dlogits.cols() != cfg.vocab_size)
    throw ShapeMismatch("dlogits shape does not match the forward pass");

  grads.w_head += fwd.hidden.transpose() * dlogits;
  grads.b_head += dlogits.colwise().sum().transpose();
  Eigen::MatrixXd dhidden = dlogits * params.w_head.transpose();

  Eigen::MatrixXd dx;
  layer_norm_backward(dhidden, fwd.xhat_final, fwd.rstd_final, params.final_scale, dx,
                      grads.final_scale, grads.final_bias);

  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const auto& layer = params.layers[li];
    const auto& cache = fwd.layers[li];
    auto& glayer = grads.layers[li];

    // MLP block: x_out = x_mid + gelu(ln2(x_mid) w1 + b1) w2 + b2
    Eigen::MatrixXd y2 = renorm(cache.xhat2, layer.ln2_scale, layer.ln2_bias);
    glayer.b2 += dx.colwise().sum().transpose();
    glayer.w2 += cache.g.transpose() * dx;
    Eigen::MatrixXd dg = dx * layer.w2.transpose();
    Eigen::MatrixXd dm1 =
        dg.array() * cache.m1.unaryExpr([](double v) { return gelu_grad(v); }).array();
    glayer.b1 += dm1.colwise().sum().transpose();
    glayer.w1 += y2.transpose() * dm1;
    Eigen::MatrixXd dy2 = dm1 * layer.w1.transpose();

    Eigen::MatrixXd dx_mid;
    layer_norm_backward(dy2, cache.xhat2, cache.rstd2, layer.ln2_scale, dx_mid,
                        glayer.ln2_scale, glayer.ln2_bias);
    dx_mid += dx;  // residual

    // Attention block: x_mid = x_in + (softmax(qk^T) v) wo
    Eigen::MatrixXd y1 = renorm(cache.xhat1, layer.ln1_scale, layer.ln1_bias);
    glayer.wo += cache.ctx.transpose() * dx_mid;
    Eigen::MatrixXd dctx = dx_mid * layer.wo.transpose();

    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(L, d);
    Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(L, d);
    Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(L, d);
    for (int h = 0; h < cfg.n_heads; ++h) {
      const Eigen::MatrixXd& probs = cache.probs[static_cast<std::size_t>(h)];
      auto vh = cache.v.middleCols(h * dh, dh);
      auto kh = cache.k.middleCols(h * dh, dh);
      auto qh = cache.q.middleCols(h * dh, dh);
      Eigen::MatrixXd dctx_h = dctx.middleCols(h * dh, dh);

      dv.middleCols(h * dh, dh) += probs.transpose() * dctx_h;
      Eigen::MatrixXd dprobs = dctx_h * vh.transpose();
      // softmax backward; rows beyond the causal frontier hold zero probs so
      // they contribute nothing.
      Eigen::MatrixXd dscores(L, L);
      for (int i = 0; i < L; ++i) {
        const double dot = (dprobs.row(i).array() * probs.row(i).array()).sum();
        dscores.row(i) = probs.row(i).array() * (dprobs.row(i).array() - dot);
      }
      dq.middleCols(h * dh, dh) += (dscores * kh) * scale;
      dk.middleCols(h * dh, dh) += (dscores.transpose() * qh) * scale;
    }

    glayer.wq += y1.transpose() * dq;
    glayer.wk += y1.transpose() * dk;
    glayer.wv += y1.transpose() * dv;
    Eigen::MatrixXd dy1 =
        dq * layer.wq.transpose() + dk * layer.wk.transpose() + dv * layer.wv.transpose();

    Eigen::MatrixXd dx_in;
    layer_norm_backward(dy1, cache.xhat1, cache.rstd1, layer.ln1_scale, dx_in,
                        glayer.ln1_scale, glayer.ln1_bias);
    dx = dx_in + dx_mid;  // residual
  }

  for (int i = 0; i < L; ++i) {
    grads.token_emb.row(tokens[static_cast<std::size_t>(i)]) += dx.row(i);
    grads.pos_emb.row(i) += dx.row(i);
  }
}

double sequence_nll(const ModelParams& params, const std::vector<int>& tokens,
                    const std::vector<uint8_t>& mask, ModelParams* grads, double grad_scale) {
  if (tokens.size() != mask.size()) throw ShapeMismatch("mask length does not match tokens");
  if (!mask.empty() && mask[0] != 0)
    throw InvalidConfig("position 0 has no preceding context to predict from");

  Forward fwd = forward(params, tokens);
  const int L = static_cast<int>(tokens.size());
  Eigen::MatrixXd dlogits;
  if (grads != nullptr) dlogits = Eigen::MatrixXd::Zero(L, params.config.vocab_size);

  double sum = 0.0;
  for (int t = 1; t < L; ++t) {
    if (mask[static_cast<std::size_t>(t)] == 0) continue;
    const int row = t - 1;
    const int target = tokens[static_cast<std::size_t>(t)];
    const auto logits_row = fwd.logits.row(row);
    const double m = logits_row.maxCoeff();
    Eigen::RowVectorXd e = (logits_row.array() - m).exp();
    const double z = e.sum();
    sum += -(logits_row(target) - m - std::log(z));
    if (grads != nullptr) {
      dlogits.row(row) += (e / z) * grad_scale;
      dlogits(row, target) -= grad_scale;
    }
  }
  if (grads != nullptr) backward(params, tokens, fwd, dlogits, *grads);
  return sum;
}

double loss_and_grads(const ModelParams& params, const dataset::Batch& batch,
                      ModelParams* grads) {
  long count = 0;
  for (std::size_t r = 0; r < batch.mask.size(); ++r)
    for (int t = 0; t < batch.lengths[r]; ++t)
      if (batch.mask[r][static_cast<std::size_t>(t)] != 0) ++count;
  if (count == 0) throw AllMaskedOut();

  const double weight = 1.0 / static_cast<double>(count);
  double sum = 0.0;
  for (std::size_t r = 0; r < batch.tokens.size(); ++r) {
    const auto len = static_cast<std::size_t>(batch.lengths[r]);
    std::vector<int> tokens(batch.tokens[r].begin(),
                            batch.tokens[r].begin() + static_cast<std::ptrdiff_t>(len));
    std::vector<uint8_t> mask(batch.mask[r].begin(),
                              batch.mask[r].begin() + static_cast<std::ptrdiff_t>(len));
    sum += sequence_nll(params, tokens, mask, grads, weight);
  }
  return sum * weight;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  if (!state.initialized) {
    state.m = zeros_like(params);
    state.v = zeros_like(params);
    state.t = 0;
    state.initialized = true;
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));

  auto pv = param_views(params);
  auto gv = param_views(const_cast<ModelParams&>(grads));
  auto mv = param_views(state.m);
  auto vv = param_views(state.v);
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (pv[i].size != gv[i].size) throw ShapeMismatch("gradient shape mismatch in adam_step");
    for (std::size_t j = 0; j < pv[i].size; ++j) {
      const double g = gv[i].data[j];
      mv[i].data[j] = beta1 * mv[i].data[j] + (1.0 - beta1) * g;
      vv[i].data[j] = beta2 * vv[i].data[j] + (1.0 - beta2) * g * g;
      const double mhat = mv[i].data[j] / bc1;
      const double vhat = vv[i].data[j] / bc2;
      pv[i].data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

namespace {

constexpr char kMagic[8] = {'L', 'O', 'G', 'F', '0', '0', '0', '1'};

nlohmann::ordered_json config_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},   {"d_model", c.d_model},
          {"n_layers", c.n_layers},       {"n_heads", c.n_heads},
          {"context_window", c.context_window}, {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::ordered_json& j) {
  ModelConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.context_window = j.at("context_window").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ShapeMismatch(std::string("bad checkpoint config: ") + e.what());
  }
  return c;
}

bool same_shape(const ModelConfig& a, const ModelConfig& b) {
  return a.vocab_size == b.vocab_size && a.d_model == b.d_model && a.n_layers == b.n_layers &&
         a.n_heads == b.n_heads && a.context_window == b.context_window;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::string config = config_json(params.config).dump();
  const std::uint64_t len = config.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  for (const auto& view : param_views(const_cast<ModelParams&>(params)))
    out.write(reinterpret_cast<const char*>(view.data),
              static_cast<std::streamsize>(view.size * sizeof(double)));
  if (!out) throw IoError("write failed: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, "LOGF", 4) != 0)
    throw BadMagic(path.string());
  if (std::memcmp(magic + 4, kMagic + 4, 4) != 0)
    throw VersionMismatch(std::string(magic + 4, 4));

  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) throw IoError("truncated checkpoint header: " + path.string());
  std::string config_bytes(len, '\0');
  in.read(config_bytes.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("truncated checkpoint config: " + path.string());

  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(config_bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ShapeMismatch(std::string("unparseable checkpoint config: ") + e.what());
  }
  ModelParams params = allocate(config_from_json(j));
  for (const auto& view : param_views(params)) {
    in.read(reinterpret_cast<char*>(view.data),
            static_cast<std::streamsize>(view.size * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != view.size * sizeof(double))
      throw ShapeMismatch("checkpoint ends before array " + view.name);
  }
  in.peek();
  if (!in.eof()) throw ShapeMismatch("checkpoint has trailing bytes");
  return params;
}

ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  ModelParams params = load_checkpoint(path);
  if (!same_shape(params.config, expected))
    throw ShapeMismatch("checkpoint config does not match the expected architecture");
  return params;
}

}  // namespace logicforge::model
