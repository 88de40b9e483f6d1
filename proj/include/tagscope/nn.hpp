#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace tagscope {

enum class CellKind { RNN, LSTM, GRU };

CellKind cell_kind_from_name(const std::string& name);
std::string cell_kind_name(CellKind kind);

// Identity activation exists so tests can check gradients of an exactly
// linear recurrence against closed forms; production models use Tanh.
enum class Activation { Tanh, Identity };

// Gate blocks stacked along rows: RNN has one block, LSTM four
// (input, forget, candidate, output), GRU three (update, reset, candidate).
struct CellParams {
  CellKind kind = CellKind::RNN;
  Activation activation = Activation::Tanh;
  int input_dim = 0;
  int hidden = 0;
  Eigen::MatrixXd w_input;   // (gates*hidden) x input_dim
  Eigen::MatrixXd w_hidden;  // (gates*hidden) x hidden
  Eigen::VectorXd bias;      // gates*hidden

  static CellParams zeros(CellKind kind, int input_dim, int hidden);
};

int gate_count(CellKind kind);

struct CellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;  // LSTM cell state; empty otherwise
};

CellState zero_state(const CellParams& params);

// One recurrence step. RNN: h' = act(Wx + Uh + b). LSTM: standard
// input/forget/output gates with cell state. GRU: update/reset gates with
// h' = (1-z) o h + z o n.
CellState cell_step(const CellParams& params, const Eigen::VectorXd& x,
                    const CellState& prev);

struct Hyperparams {
  CellKind cell = CellKind::LSTM;
  int embed_dim = 50;
  int hidden = 50;
  std::uint64_t seed = 1;
  double lr = 0.05;
  int epochs = 21;
  double clip_norm = 5.0;
  bool freeze_transitions = false;
};

// All learned parameters. projection row t is [p_L ; p_R] for tag t; the
// transition matrix has one row per tag plus a start row (index num_tags).
struct ModelParams {
  CellParams forward_cell;
  CellParams backward_cell;
  Eigen::MatrixXd projection;   // num_tags x 2*hidden
  Eigen::VectorXd bias;         // num_tags
  Eigen::MatrixXd transitions;  // (num_tags+1) x num_tags
  Hyperparams hp;

  int num_tags() const { return static_cast<int>(projection.rows()); }
  int hidden() const { return forward_cell.hidden; }
  int start_state() const { return num_tags(); }

  // uniform(-0.25, 0.25) everywhere from the run seed, then LSTM forget
  // biases set to 1.
  static ModelParams init(const Hyperparams& hp, int num_tags);
};

struct HiddenStates {
  Eigen::MatrixXd left;   // n x hidden, row i = h_L(i)
  Eigen::MatrixXd right;  // n x hidden, row i = h_R(i)
  int length() const { return static_cast<int>(left.rows()); }
};

HiddenStates encode_bidirectional(const ModelParams& model,
                                  const std::vector<Eigen::VectorXd>& xs);

enum class Side { Left, Right };

// The two halves of an emission score. left = p_L . h_L and
// right = p_R . h_R + bias; their sum is the emission, bit-exactly, because
// every emission in the codebase is computed through this kernel.
struct EmissionParts {
  double left;
  double right;
};

EmissionParts emission_parts(const ModelParams& model, const HiddenStates& s,
                             int token, int tag);

Eigen::MatrixXd emissions(const ModelParams& model, const HiddenStates& s);

EmissionParts split_emission(const ModelParams& model, const HiddenStates& s,
                             int token, int tag);

// A single side evaluated in isolation carries the full bias:
// p_{t,K} . h_K + bias_t.
double side_score(const ModelParams& model, const HiddenStates& s, int token,
                  int tag, Side side);

Eigen::VectorXd side_weights(const ModelParams& model, int tag, Side side);
Eigen::VectorXd side_hidden(const HiddenStates& s, int token, Side side);

// -- backpropagation ---------------------------------------------------------

struct CellSeqCache {
  std::vector<Eigen::VectorXd> gates;     // activated gate stack per step
  std::vector<Eigen::VectorXd> cell;      // LSTM c_t
  std::vector<Eigen::VectorXd> cell_act;  // LSTM act(c_t)
  std::vector<Eigen::VectorXd> h;
  std::vector<Eigen::VectorXd> reset_h;   // GRU r o h_prev
};

// Runs the cell over xs in order, returning outputs and filling the cache
// when given.
std::vector<Eigen::VectorXd> run_cell(const CellParams& params,
                                      const std::vector<Eigen::VectorXd>& xs,
                                      CellSeqCache* cache);

struct CellGrads {
  Eigen::MatrixXd w_input;
  Eigen::MatrixXd w_hidden;
  Eigen::VectorXd bias;
};

// Backpropagation through time for one direction. d_h holds the loss
// gradient w.r.t. each step's output, in processing order.
CellGrads cell_backward(const CellParams& params,
                        const std::vector<Eigen::VectorXd>& xs,
                        const CellSeqCache& cache,
                        const std::vector<Eigen::VectorXd>& d_h);

struct ForwardCache {
  std::vector<Eigen::VectorXd> xs;
  CellSeqCache left_cache;
  CellSeqCache right_cache;  // in right-to-left processing order
  HiddenStates states;
  Eigen::MatrixXd emission;  // n x num_tags
};

ForwardCache forward_pass(const ModelParams& model,
                          std::vector<Eigen::VectorXd> xs);

struct ModelGrads {
  CellGrads forward_cell;
  CellGrads backward_cell;
  Eigen::MatrixXd projection;
  Eigen::VectorXd bias;
  Eigen::MatrixXd transitions;

  double squared_norm() const;
  void scale(double factor);
};

// Gradients of a loss expressed through its emission-score gradient; the
// transition block is left zero for the caller to fill.
ModelGrads backward_from_emissions(const ModelParams& model,
                                   const ForwardCache& cache,
                                   const Eigen::MatrixXd& d_emissions);

// Negative log likelihood of the tag sequence under the model (emission +
// transition path score against the log partition).
double model_sentence_nll(const ModelParams& model,
                          const std::vector<Eigen::VectorXd>& xs,
                          const std::vector<int>& tags);

}  // namespace tagscope
