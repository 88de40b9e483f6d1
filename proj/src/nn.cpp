#include "tagscope/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "tagscope/crf.hpp"
#include "tagscope/rng.hpp"

namespace tagscope {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd apply_sigmoid(const Eigen::VectorXd& v) {
  return v.unaryExpr([](double x) { return sigmoid(x); });
}

Eigen::VectorXd apply_act(const Eigen::VectorXd& v, Activation act) {
  if (act == Activation::Identity) return v;
  return v.unaryExpr([](double x) { return std::tanh(x); });
}

// Derivative of the activation expressed through its output value.
Eigen::VectorXd act_deriv_from_output(const Eigen::VectorXd& y,
                                      Activation act) {
  if (act == Activation::Identity) return Eigen::VectorXd::Ones(y.size());
  return (1.0 - y.array().square()).matrix();
}

Eigen::VectorXd sigmoid_deriv_from_output(const Eigen::VectorXd& y) {
  return (y.array() * (1.0 - y.array())).matrix();
}

void fill_uniform(Eigen::MatrixXd& m, Rng& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rng.uniform(-0.25, 0.25);
}

void fill_uniform(Eigen::VectorXd& v, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-0.25, 0.25);
}

}  // namespace

CellKind cell_kind_from_name(const std::string& name) {
  if (name == "rnn") return CellKind::RNN;
  if (name == "lstm") return CellKind::LSTM;
  if (name == "gru") return CellKind::GRU;
  throw std::runtime_error("unknown cell kind '" + name +
                           "' (expected rnn, lstm, or gru)");
}

std::string cell_kind_name(CellKind kind) {
  switch (kind) {
    case CellKind::RNN: return "rnn";
    case CellKind::LSTM: return "lstm";
    case CellKind::GRU: return "gru";
  }
  return "?";
}

int gate_count(CellKind kind) {
  switch (kind) {
    case CellKind::RNN: return 1;
    case CellKind::LSTM: return 4;
    case CellKind::GRU: return 3;
  }
  return 0;
}

CellParams CellParams::zeros(CellKind kind, int input_dim, int hidden) {
  CellParams p;
  p.kind = kind;
  p.input_dim = input_dim;
  p.hidden = hidden;
  const int g = gate_count(kind) * hidden;
  p.w_input = Eigen::MatrixXd::Zero(g, input_dim);
  p.w_hidden = Eigen::MatrixXd::Zero(g, hidden);
  p.bias = Eigen::VectorXd::Zero(g);
  return p;
}

CellState zero_state(const CellParams& params) {
  CellState s;
  s.h = Eigen::VectorXd::Zero(params.hidden);
  if (params.kind == CellKind::LSTM)
    s.c = Eigen::VectorXd::Zero(params.hidden);
  return s;
}

CellState cell_step(const CellParams& params, const Eigen::VectorXd& x,
                    const CellState& prev) {
  if (x.size() != params.input_dim)
    throw std::runtime_error("cell_step: input has dimension " +
                             std::to_string(x.size()) + ", cell expects " +
                             std::to_string(params.input_dim));
  if (prev.h.size() != params.hidden)
    throw std::runtime_error("cell_step: state size mismatch");
  const int h = params.hidden;
  CellState next;
  switch (params.kind) {
    case CellKind::RNN: {
      Eigen::VectorXd a =
          params.w_input * x + params.w_hidden * prev.h + params.bias;
      next.h = apply_act(a, params.activation);
      break;
    }
    case CellKind::LSTM: {
      Eigen::VectorXd a =
          params.w_input * x + params.w_hidden * prev.h + params.bias;
      Eigen::VectorXd i = apply_sigmoid(a.segment(0, h));
      Eigen::VectorXd f = apply_sigmoid(a.segment(h, h));
      Eigen::VectorXd g = apply_act(a.segment(2 * h, h), params.activation);
      Eigen::VectorXd o = apply_sigmoid(a.segment(3 * h, h));
      next.c = (f.array() * prev.c.array() + i.array() * g.array()).matrix();
      next.h =
          (o.array() * apply_act(next.c, params.activation).array()).matrix();
      break;
    }
    case CellKind::GRU: {
      Eigen::VectorXd ax = params.w_input * x + params.bias;
      Eigen::VectorXd z = apply_sigmoid(
          ax.segment(0, h) + params.w_hidden.middleRows(0, h) * prev.h);
      Eigen::VectorXd r = apply_sigmoid(
          ax.segment(h, h) + params.w_hidden.middleRows(h, h) * prev.h);
      Eigen::VectorXd rh = (r.array() * prev.h.array()).matrix();
      Eigen::VectorXd n =
          apply_act(ax.segment(2 * h, h) +
                        params.w_hidden.middleRows(2 * h, h) * rh,
                    params.activation);
      next.h = ((1.0 - z.array()) * prev.h.array() + z.array() * n.array())
                   .matrix();
      break;
    }
  }
  return next;
}

ModelParams ModelParams::init(const Hyperparams& hp, int num_tags) {
  ModelParams m;
  m.hp = hp;
  m.forward_cell = CellParams::zeros(hp.cell, hp.embed_dim, hp.hidden);
  m.backward_cell = CellParams::zeros(hp.cell, hp.embed_dim, hp.hidden);
  m.projection = Eigen::MatrixXd::Zero(num_tags, 2 * hp.hidden);
  m.bias = Eigen::VectorXd::Zero(num_tags);
  m.transitions = Eigen::MatrixXd::Zero(num_tags + 1, num_tags);

  Rng rng(mix_seed(hp.seed, kSeedStreamInit));
  for (CellParams* cell : {&m.forward_cell, &m.backward_cell}) {
    fill_uniform(cell->w_input, rng);
    fill_uniform(cell->w_hidden, rng);
    fill_uniform(cell->bias, rng);
  }
  fill_uniform(m.projection, rng);
  fill_uniform(m.bias, rng);
  fill_uniform(m.transitions, rng);
  if (hp.cell == CellKind::LSTM) {
    m.forward_cell.bias.segment(hp.hidden, hp.hidden).setOnes();
    m.backward_cell.bias.segment(hp.hidden, hp.hidden).setOnes();
  }
  if (hp.freeze_transitions) m.transitions.setZero();
  return m;
}

std::vector<Eigen::VectorXd> run_cell(const CellParams& params,
                                      const std::vector<Eigen::VectorXd>& xs,
                                      CellSeqCache* cache) {
  const int h = params.hidden;
  std::vector<Eigen::VectorXd> out;
  out.reserve(xs.size());
  CellState state = zero_state(params);
  for (const auto& x : xs) {
    if (cache && params.kind == CellKind::GRU) {
      // GRU needs r o h_prev cached; recompute the pieces here.
      Eigen::VectorXd ax = params.w_input * x + params.bias;
      Eigen::VectorXd z = apply_sigmoid(
          ax.segment(0, h) + params.w_hidden.middleRows(0, h) * state.h);
      Eigen::VectorXd r = apply_sigmoid(
          ax.segment(h, h) + params.w_hidden.middleRows(h, h) * state.h);
      Eigen::VectorXd rh = (r.array() * state.h.array()).matrix();
      Eigen::VectorXd n =
          apply_act(ax.segment(2 * h, h) +
                        params.w_hidden.middleRows(2 * h, h) * rh,
                    params.activation);
      Eigen::VectorXd hnew =
          ((1.0 - z.array()) * state.h.array() + z.array() * n.array())
              .matrix();
      Eigen::VectorXd gates(3 * h);
      gates << z, r, n;
      cache->gates.push_back(std::move(gates));
      cache->reset_h.push_back(std::move(rh));
      state.h = hnew;
      cache->h.push_back(state.h);
      out.push_back(state.h);
      continue;
    }
    if (cache && params.kind == CellKind::LSTM) {
      Eigen::VectorXd a =
          params.w_input * x + params.w_hidden * state.h + params.bias;
      Eigen::VectorXd i = apply_sigmoid(a.segment(0, h));
      Eigen::VectorXd f = apply_sigmoid(a.segment(h, h));
      Eigen::VectorXd g = apply_act(a.segment(2 * h, h), params.activation);
      Eigen::VectorXd o = apply_sigmoid(a.segment(3 * h, h));
      Eigen::VectorXd c =
          (f.array() * state.c.array() + i.array() * g.array()).matrix();
      Eigen::VectorXd ca = apply_act(c, params.activation);
      Eigen::VectorXd hnew = (o.array() * ca.array()).matrix();
      Eigen::VectorXd gates(4 * h);
      gates << i, f, g, o;
      cache->gates.push_back(std::move(gates));
      cache->cell.push_back(c);
      cache->cell_act.push_back(std::move(ca));
      state.c = std::move(c);
      state.h = hnew;
      cache->h.push_back(state.h);
      out.push_back(state.h);
      continue;
    }
    state = cell_step(params, x, state);
    if (cache) {
      if (params.kind == CellKind::RNN) cache->gates.push_back(state.h);
      cache->h.push_back(state.h);
    }
    out.push_back(state.h);
  }
  return out;
}

HiddenStates encode_bidirectional(const ModelParams& model,
                                  const std::vector<Eigen::VectorXd>& xs) {
  if (xs.empty())
    throw std::runtime_error("encode_bidirectional: empty sentence");
  const int n = static_cast<int>(xs.size());
  const int h = model.hidden();

  auto left = run_cell(model.forward_cell, xs, nullptr);
  std::vector<Eigen::VectorXd> rev(xs.rbegin(), xs.rend());
  auto right = run_cell(model.backward_cell, rev, nullptr);

  HiddenStates s;
  s.left.resize(n, h);
  s.right.resize(n, h);
  for (int i = 0; i < n; ++i) {
    s.left.row(i) = left[i];
    s.right.row(i) = right[n - 1 - i];
  }
  return s;
}

EmissionParts emission_parts(const ModelParams& model, const HiddenStates& s,
                             int token, int tag) {
  const int h = model.hidden();
  EmissionParts parts;
  parts.left = model.projection.row(tag).head(h).dot(s.left.row(token));
  parts.right =
      model.projection.row(tag).tail(h).dot(s.right.row(token)) +
      model.bias[tag];
  return parts;
}

Eigen::MatrixXd emissions(const ModelParams& model, const HiddenStates& s) {
  const int n = s.length();
  const int t_count = model.num_tags();
  Eigen::MatrixXd e(n, t_count);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < t_count; ++t) {
      EmissionParts p = emission_parts(model, s, i, t);
      e(i, t) = p.left + p.right;
    }
  return e;
}

EmissionParts split_emission(const ModelParams& model, const HiddenStates& s,
                             int token, int tag) {
  return emission_parts(model, s, token, tag);
}

double side_score(const ModelParams& model, const HiddenStates& s, int token,
                  int tag, Side side) {
  EmissionParts p = emission_parts(model, s, token, tag);
  if (side == Side::Right) return p.right;
  return p.left + model.bias[tag];
}

Eigen::VectorXd side_weights(const ModelParams& model, int tag, Side side) {
  const int h = model.hidden();
  if (side == Side::Left) return model.projection.row(tag).head(h);
  return model.projection.row(tag).tail(h);
}

Eigen::VectorXd side_hidden(const HiddenStates& s, int token, Side side) {
  return side == Side::Left ? s.left.row(token) : s.right.row(token);
}

ForwardCache forward_pass(const ModelParams& model,
                          std::vector<Eigen::VectorXd> xs) {
  if (xs.empty()) throw std::runtime_error("forward_pass: empty sentence");
  ForwardCache cache;
  cache.xs = std::move(xs);
  const int n = static_cast<int>(cache.xs.size());
  const int h = model.hidden();

  auto left = run_cell(model.forward_cell, cache.xs, &cache.left_cache);
  std::vector<Eigen::VectorXd> rev(cache.xs.rbegin(), cache.xs.rend());
  auto right = run_cell(model.backward_cell, rev, &cache.right_cache);

  cache.states.left.resize(n, h);
  cache.states.right.resize(n, h);
  for (int i = 0; i < n; ++i) {
    cache.states.left.row(i) = left[i];
    cache.states.right.row(i) = right[n - 1 - i];
  }
  cache.emission = emissions(model, cache.states);
  return cache;
}

CellGrads cell_backward(const CellParams& params,
                        const std::vector<Eigen::VectorXd>& xs,
                        const CellSeqCache& cache,
                        const std::vector<Eigen::VectorXd>& d_h) {
  const int n = static_cast<int>(xs.size());
  const int h = params.hidden;
  CellGrads g;
  g.w_input = Eigen::MatrixXd::Zero(params.w_input.rows(), params.w_input.cols());
  g.w_hidden =
      Eigen::MatrixXd::Zero(params.w_hidden.rows(), params.w_hidden.cols());
  g.bias = Eigen::VectorXd::Zero(params.bias.size());

  Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dc_carry = Eigen::VectorXd::Zero(h);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(h);

  for (int s = n - 1; s >= 0; --s) {
    const Eigen::VectorXd& h_prev = s > 0 ? cache.h[s - 1] : zero;
    Eigen::VectorXd dh = d_h[s] + dh_carry;
    switch (params.kind) {
      case CellKind::RNN: {
        Eigen::VectorXd da =
            (dh.array() *
             act_deriv_from_output(cache.h[s], params.activation).array())
                .matrix();
        g.w_input += da * xs[s].transpose();
        g.w_hidden += da * h_prev.transpose();
        g.bias += da;
        dh_carry = params.w_hidden.transpose() * da;
        break;
      }
      case CellKind::LSTM: {
        const auto& gates = cache.gates[s];
        Eigen::VectorXd i = gates.segment(0, h);
        Eigen::VectorXd f = gates.segment(h, h);
        Eigen::VectorXd gg = gates.segment(2 * h, h);
        Eigen::VectorXd o = gates.segment(3 * h, h);
        const Eigen::VectorXd& c_prev = s > 0 ? cache.cell[s - 1] : zero;
        const Eigen::VectorXd& ca = cache.cell_act[s];

        Eigen::VectorXd d_o = (dh.array() * ca.array()).matrix();
        Eigen::VectorXd dc =
            dc_carry +
            (dh.array() * o.array() *
             act_deriv_from_output(ca, params.activation).array())
                .matrix();
        Eigen::VectorXd d_i = (dc.array() * gg.array()).matrix();
        Eigen::VectorXd d_f = (dc.array() * c_prev.array()).matrix();
        Eigen::VectorXd d_g = (dc.array() * i.array()).matrix();
        dc_carry = (dc.array() * f.array()).matrix();

        Eigen::VectorXd da(4 * h);
        da.segment(0, h) =
            (d_i.array() * sigmoid_deriv_from_output(i).array()).matrix();
        da.segment(h, h) =
            (d_f.array() * sigmoid_deriv_from_output(f).array()).matrix();
        da.segment(2 * h, h) =
            (d_g.array() *
             act_deriv_from_output(gg, params.activation).array())
                .matrix();
        da.segment(3 * h, h) =
            (d_o.array() * sigmoid_deriv_from_output(o).array()).matrix();

        g.w_input += da * xs[s].transpose();
        g.w_hidden += da * h_prev.transpose();
        g.bias += da;
        dh_carry = params.w_hidden.transpose() * da;
        break;
      }
      case CellKind::GRU: {
        const auto& gates = cache.gates[s];
        Eigen::VectorXd z = gates.segment(0, h);
        Eigen::VectorXd r = gates.segment(h, h);
        Eigen::VectorXd nn = gates.segment(2 * h, h);
        const Eigen::VectorXd& rh = cache.reset_h[s];

        Eigen::VectorXd dz = (dh.array() * (nn - h_prev).array()).matrix();
        Eigen::VectorXd dn = (dh.array() * z.array()).matrix();
        Eigen::VectorXd dh_prev = (dh.array() * (1.0 - z.array())).matrix();

        Eigen::VectorXd da_n =
            (dn.array() *
             act_deriv_from_output(nn, params.activation).array())
                .matrix();
        Eigen::VectorXd drh =
            params.w_hidden.middleRows(2 * h, h).transpose() * da_n;
        Eigen::VectorXd dr = (drh.array() * h_prev.array()).matrix();
        dh_prev += (drh.array() * r.array()).matrix();

        Eigen::VectorXd da_z =
            (dz.array() * sigmoid_deriv_from_output(z).array()).matrix();
        Eigen::VectorXd da_r =
            (dr.array() * sigmoid_deriv_from_output(r).array()).matrix();

        g.w_input.middleRows(0, h) += da_z * xs[s].transpose();
        g.w_input.middleRows(h, h) += da_r * xs[s].transpose();
        g.w_input.middleRows(2 * h, h) += da_n * xs[s].transpose();
        g.w_hidden.middleRows(0, h) += da_z * h_prev.transpose();
        g.w_hidden.middleRows(h, h) += da_r * h_prev.transpose();
        g.w_hidden.middleRows(2 * h, h) += da_n * rh.transpose();
        g.bias.segment(0, h) += da_z;
        g.bias.segment(h, h) += da_r;
        g.bias.segment(2 * h, h) += da_n;

        dh_carry = params.w_hidden.middleRows(0, h).transpose() * da_z +
                   params.w_hidden.middleRows(h, h).transpose() * da_r +
                   dh_prev;
        break;
      }
    }
  }
  return g;
}

double ModelGrads::squared_norm() const {
  double s = 0;
  for (const CellGrads* c : {&forward_cell, &backward_cell}) {
    s += c->w_input.squaredNorm();
    s += c->w_hidden.squaredNorm();
    s += c->bias.squaredNorm();
  }
  s += projection.squaredNorm();
  s += bias.squaredNorm();
  s += transitions.squaredNorm();
  return s;
}

void ModelGrads::scale(double factor) {
  for (CellGrads* c : {&forward_cell, &backward_cell}) {
    c->w_input *= factor;
    c->w_hidden *= factor;
    c->bias *= factor;
  }
  projection *= factor;
  bias *= factor;
  transitions *= factor;
}

ModelGrads backward_from_emissions(const ModelParams& model,
                                   const ForwardCache& cache,
                                   const Eigen::MatrixXd& d_emissions) {
  const int n = static_cast<int>(cache.xs.size());
  const int h = model.hidden();

  ModelGrads g;
  g.projection = Eigen::MatrixXd::Zero(model.projection.rows(),
                                       model.projection.cols());
  g.bias = Eigen::VectorXd::Zero(model.bias.size());
  g.transitions = Eigen::MatrixXd::Zero(model.transitions.rows(),
                                        model.transitions.cols());

  // Output layer: emission(i,t) = p_L . h_L(i) + p_R . h_R(i) + bias_t.
  g.projection.leftCols(h) = d_emissions.transpose() * cache.states.left;
  g.projection.rightCols(h) = d_emissions.transpose() * cache.states.right;
  g.bias = d_emissions.colwise().sum().transpose();

  Eigen::MatrixXd d_left = d_emissions * model.projection.leftCols(h);
  Eigen::MatrixXd d_right = d_emissions * model.projection.rightCols(h);

  std::vector<Eigen::VectorXd> d_h_left(n), d_h_right(n);
  for (int i = 0; i < n; ++i) {
    d_h_left[i] = d_left.row(i);
    // The right cell processed tokens in reverse; mirror the gradient order.
    d_h_right[n - 1 - i] = d_right.row(i);
  }

  g.forward_cell =
      cell_backward(model.forward_cell, cache.xs, cache.left_cache, d_h_left);
  std::vector<Eigen::VectorXd> rev(cache.xs.rbegin(), cache.xs.rend());
  g.backward_cell =
      cell_backward(model.backward_cell, rev, cache.right_cache, d_h_right);
  return g;
}

double model_sentence_nll(const ModelParams& model,
                          const std::vector<Eigen::VectorXd>& xs,
                          const std::vector<int>& tags) {
  HiddenStates s = encode_bidirectional(model, xs);
  Eigen::MatrixXd e = emissions(model, s);
  return sentence_nll(e, model.transitions, tags);
}

}  // namespace tagscope
