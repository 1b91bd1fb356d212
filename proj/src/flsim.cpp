#include "fedzip/flsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/core.h>

namespace fedzip::fl {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  // splitmix64 finalizer over a simple combination
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1) + 0xbf58476d1ce4e5b9ull * (c + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Dataset sample_dataset(const std::vector<std::vector<float>>& centers, double sigma, std::size_t n,
                       std::mt19937_64& rng) {
  Dataset ds;
  ds.dim = centers.front().size();
  ds.features.reserve(n * ds.dim);
  ds.labels.reserve(n);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(centers.size() - 1));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto y = pick(rng);
    ds.labels.push_back(y);
    for (std::size_t j = 0; j < ds.dim; ++j)
      ds.features.push_back(static_cast<float>(centers[y][j] + sigma * noise(rng)));
  }
  return ds;
}

void check_same_structure(const StateDict& a, const StateDict& b) {
  if (a.size() != b.size()) fail(Errc::StructureMismatch, "states have different entry counts");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.entries()[i];
    const auto& y = b.entries()[i];
    if (x.name() != y.name() || x.shape() != y.shape() || x.dtype() != y.dtype())
      fail(Errc::StructureMismatch, fmt::format("entry {} differs: '{}' vs '{}'", i, x.name(), y.name()));
  }
}

}  // namespace

TaskData gen_task(const SyntheticTask& task, std::size_t num_clients) {
  if (task.num_classes < 1 || task.input_dim < 1) fail(Errc::InvalidConfig, "task needs >= 1 class and dimension");
  if (num_clients < 1) fail(Errc::InvalidConfig, "task needs >= 1 client");
  if (task.noise_sigma < 0.0 || !(task.center_scale > 0.0)) fail(Errc::InvalidConfig, "invalid task scales");

  std::mt19937_64 rng(task.seed);
  std::normal_distribution<double> coord(0.0, task.center_scale);
  TaskData out;
  out.centers.assign(task.num_classes, std::vector<float>(task.input_dim));
  for (auto& c : out.centers)
    for (auto& v : c) v = static_cast<float>(coord(rng));

  // IID partition: every client draws from the same label distribution.
  for (std::size_t i = 0; i < num_clients; ++i)
    out.clients.push_back(sample_dataset(out.centers, task.noise_sigma, task.samples_per_client, rng));
  out.eval = sample_dataset(out.centers, task.noise_sigma, task.eval_samples, rng);
  return out;
}

TinyNet::TinyNet(std::size_t input_dim, std::size_t hidden, std::size_t classes)
    : d_(input_dim), h_(hidden), k_(classes), p_(hidden * input_dim + hidden + classes * hidden + classes, 0.0) {
  if (d_ == 0 || h_ == 0 || k_ == 0) fail(Errc::InvalidConfig, "network dimensions must be positive");
}

TinyNet TinyNet::init(std::size_t input_dim, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
  TinyNet net(input_dim, hidden, classes);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t from, std::size_t count, std::size_t fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<float> u(static_cast<float>(-bound), static_cast<float>(bound));
    for (std::size_t i = 0; i < count; ++i) net.p_[from + i] = u(rng);
  };
  fill(net.w1(), hidden * input_dim, input_dim);
  fill(net.b1(), hidden, input_dim);
  fill(net.w2(), classes * hidden, hidden);
  fill(net.b2(), classes, hidden);
  return net;
}

TinyNet TinyNet::from_state(const StateDict& state) {
  const auto& w1 = state.at("fc1.weight");
  const auto& b1 = state.at("fc1.bias");
  const auto& w2 = state.at("fc2.weight");
  const auto& b2 = state.at("fc2.bias");
  if (w1.shape().size() != 2 || w2.shape().size() != 2)
    fail(Errc::ShapeMismatch, "fc weights must be rank 2");
  auto h = w1.shape()[0], d = w1.shape()[1], k = w2.shape()[0];
  if (w2.shape()[1] != h || b1.shape() != Shape{h} || b2.shape() != Shape{k})
    fail(Errc::ShapeMismatch, "inconsistent TinyNet layer shapes");
  TinyNet net(d, h, k);
  auto copy = [&](const TensorRecord& t, std::size_t at) {
    auto src = t.f32();
    std::copy(src.begin(), src.end(), net.p_.begin() + static_cast<std::ptrdiff_t>(at));
  };
  copy(w1, net.w1());
  copy(b1, net.b1());
  copy(w2, net.w2());
  copy(b2, net.b2());
  return net;
}

StateDict TinyNet::to_state() const {
  auto slice = [&](std::size_t at, std::size_t n) {
    std::vector<float> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(p_[at + i]);
    return v;
  };
  StateDict s;
  s.add(TensorRecord("fc1.weight", {h_, d_}, slice(w1(), h_ * d_)));
  s.add(TensorRecord("fc1.bias", {h_}, slice(b1(), h_)));
  s.add(TensorRecord("fc2.weight", {k_, h_}, slice(w2(), k_ * h_)));
  s.add(TensorRecord("fc2.bias", {k_}, slice(b2(), k_)));
  return s;
}

void TinyNet::forward(std::span<const float> x, std::vector<double>& hidden, std::vector<double>& logits) const {
  hidden.assign(h_, 0.0);
  logits.assign(k_, 0.0);
  for (std::size_t j = 0; j < h_; ++j) {
    double a = p_[b1() + j];
    const double* row = &p_[w1() + j * d_];
    for (std::size_t i = 0; i < d_; ++i) a += row[i] * x[i];
    hidden[j] = a > 0.0 ? a : 0.0;
  }
  for (std::size_t c = 0; c < k_; ++c) {
    double z = p_[b2() + c];
    const double* row = &p_[w2() + c * h_];
    for (std::size_t j = 0; j < h_; ++j) z += row[j] * hidden[j];
    logits[c] = z;
  }
}

std::vector<bool> TinyNet::active_units(std::span<const float> x) const {
  std::vector<double> hidden, logits;
  forward(x, hidden, logits);
  std::vector<bool> out(h_);
  for (std::size_t j = 0; j < h_; ++j) out[j] = hidden[j] > 0.0;
  return out;
}

double TinyNet::loss(const Dataset& data, std::span<const std::size_t> idx) const {
  std::vector<double> hidden, logits;
  double total = 0.0;
  for (auto n : idx) {
    forward(data.row(n), hidden, logits);
    double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto z : logits) sum += std::exp(z - zmax);
    total += zmax + std::log(sum) - logits[data.labels[n]];
  }
  return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
}

double TinyNet::loss_and_gradient(const Dataset& data, std::span<const std::size_t> idx,
                                  std::vector<double>& grad) const {
  grad.assign(p_.size(), 0.0);
  if (idx.empty()) return 0.0;
  std::vector<double> hidden, logits, dlogits(k_), dhidden(h_);
  double total = 0.0;
  for (auto n : idx) {
    auto x = data.row(n);
    auto y = data.labels[n];
    forward(x, hidden, logits);
    double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < k_; ++c) {
      dlogits[c] = std::exp(logits[c] - zmax);
      sum += dlogits[c];
    }
    total += zmax + std::log(sum) - logits[y];
    for (std::size_t c = 0; c < k_; ++c) dlogits[c] /= sum;
    dlogits[y] -= 1.0;

    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (std::size_t c = 0; c < k_; ++c) {
      grad[b2() + c] += dlogits[c];
      double* grow = &grad[w2() + c * h_];
      const double* prow = &p_[w2() + c * h_];
      for (std::size_t j = 0; j < h_; ++j) {
        grow[j] += dlogits[c] * hidden[j];
        dhidden[j] += prow[j] * dlogits[c];
      }
    }
    for (std::size_t j = 0; j < h_; ++j) {
      if (hidden[j] <= 0.0) continue;
      grad[b1() + j] += dhidden[j];
      double* grow = &grad[w1() + j * d_];
      for (std::size_t i = 0; i < d_; ++i) grow[i] += dhidden[j] * x[i];
    }
  }
  double inv = 1.0 / static_cast<double>(idx.size());
  for (auto& g : grad) g *= inv;
  return total * inv;
}

std::uint32_t TinyNet::predict(std::span<const float> x) const {
  std::vector<double> hidden, logits;
  forward(x, hidden, logits);
  return static_cast<std::uint32_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double TinyNet::accuracy(const Dataset& data) const {
  if (data.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t n = 0; n < data.size(); ++n) hits += predict(data.row(n)) == data.labels[n];
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

StateDict local_train(const StateDict& model, const Dataset& data, std::size_t epochs, double lr,
                      std::size_t batch_size, std::uint64_t seed) {
  auto net = TinyNet::from_state(model);
  if (data.dim != net.input_dim())
    fail(Errc::ShapeMismatch, fmt::format("model expects {} inputs, data has {}", net.input_dim(), data.dim));
  for (auto y : data.labels)
    if (y >= net.classes()) fail(Errc::ShapeMismatch, fmt::format("label {} exceeds model classes", y));
  if (batch_size < 1) fail(Errc::InvalidConfig, "batch size must be >= 1");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad;
  auto& p = net.params();
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      auto n = std::min(batch_size, order.size() - start);
      net.loss_and_gradient(data, std::span(order).subspan(start, n), grad);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * grad[i];
    }
  }
  return net.to_state();
}

double evaluate(const StateDict& model, const Dataset& data) { return TinyNet::from_state(model).accuracy(data); }

StateDict fedavg_aggregate(std::span<const StateDict> states, std::span<const double> weights) {
  if (states.empty()) fail(Errc::StructureMismatch, "nothing to aggregate");
  if (weights.size() != states.size()) fail(Errc::StructureMismatch, "one weight per state is required");
  double total = 0.0;
  for (auto w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(Errc::InvalidArgument, "weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) fail(Errc::InvalidArgument, "weights must sum to a positive value");
  for (std::size_t s = 1; s < states.size(); ++s) check_same_structure(states[0], states[s]);

  StateDict out;
  for (std::size_t e = 0; e < states[0].size(); ++e) {
    const auto& first = states[0].entries()[e];
    auto n = static_cast<std::size_t>(first.size());
    std::vector<double> acc(n, 0.0);
    for (std::size_t s = 0; s < states.size(); ++s) {
      double w = weights[s] / total;
      if (w == 0.0) continue;
      std::visit(
          [&](const auto& v) {
            for (std::size_t i = 0; i < n; ++i) acc[i] += w * static_cast<double>(v[i]);
          },
          states[s].entries()[e].storage());
    }
    TensorRecord::Storage data = std::visit(
        [&](const auto& v) -> TensorRecord::Storage {
          using T = typename std::decay_t<decltype(v)>::value_type;
          std::vector<T> r(n);
          for (std::size_t i = 0; i < n; ++i) {
            if constexpr (std::is_floating_point_v<T>)
              r[i] = static_cast<T>(acc[i]);
            else if constexpr (std::is_same_v<T, std::uint8_t>)
              r[i] = static_cast<T>(std::clamp(std::lround(acc[i]), 0L, 255L));
            else
              r[i] = static_cast<T>(std::llround(acc[i]));
          }
          return r;
        },
        first.storage());
    out.add(TensorRecord(first.name(), first.shape(), std::move(data)));
  }
  return out;
}

void validate(const FLConfig& cfg) {
  if (cfg.clients < 1) fail(Errc::InvalidConfig, "need at least one client");
  if (cfg.rounds < 1) fail(Errc::InvalidConfig, "need at least one round");
  if (cfg.batch_size < 1) fail(Errc::InvalidConfig, "batch size must be >= 1");
  if (cfg.hidden < 1) fail(Errc::InvalidConfig, "hidden width must be >= 1");
  if (!(cfg.lr >= 0.0)) fail(Errc::InvalidConfig, "learning rate must be non-negative");
  if (!(cfg.compute.compress_bytes_per_s > 0.0) || !(cfg.compute.decompress_bytes_per_s > 0.0))
    fail(Errc::InvalidConfig, "compute throughputs must be positive");
  if (cfg.codec) validate(*cfg.codec);
  validate(cfg.rule);
  validate(cfg.lossless);
  validate(cfg.network);
}

Simulation::Simulation(FLConfig config) : cfg(std::move(config)) {
  validate(cfg);
  data = gen_task(cfg.task, cfg.clients);
  if (cfg.clock == ClockMode::virtual_time)
    clock = std::make_unique<VirtualClock>();
  else
    clock = std::make_unique<RealClock>();
  global = TinyNet::init(cfg.task.input_dim, cfg.hidden, cfg.task.num_classes, mix_seed(cfg.seed, 0xC0FFEE))
               .to_state();
}

std::pair<StateDict, RoundMetrics> run_round(const FLConfig& cfg, const TaskData& data, Clock& clock,
                                             const StateDict& global_state, std::size_t round_idx,
                                             const UpdateObserver& observer) {
  using steady = std::chrono::steady_clock;
  auto seconds_since = [](steady::time_point t0) {
    return std::chrono::duration<double>(steady::now() - t0).count();
  };
  const bool virtual_time = clock.is_virtual();

  RoundMetrics metrics;
  metrics.round = round_idx;
  auto round_start = clock.now();

  std::vector<StateDict> received;
  std::vector<double> weights;
  for (std::size_t i = 0; i < cfg.clients; ++i) {
    const auto& local_data = data.clients.at(i);
    auto local = local_train(global_state, local_data, cfg.local_epochs, cfg.lr, cfg.batch_size,
                             mix_seed(cfg.seed, round_idx, i));
    ClientMetrics m;
    m.client = i;
    m.original_bytes = local.payload_bytes();
    StateDict restored;
    if (cfg.codec) {
      auto t0 = steady::now();
      auto update = compress_update(local, *cfg.codec, cfg.rule, cfg.lossless);
      auto bytes = serialize_update(update);
      m.compress_seconds = virtual_time ? static_cast<double>(m.original_bytes) / cfg.compute.compress_bytes_per_s
                                        : seconds_since(t0);
      if (virtual_time) clock.sleep_for(m.compress_seconds);
      m.compressed_bytes = bytes.size();

      m.transfer_seconds = emulate_send(static_cast<double>(bytes.size()), cfg.network, clock, i);

      auto t1 = steady::now();
      restored = decompress_update(bytes);
      m.decompress_seconds = virtual_time
                                 ? static_cast<double>(m.original_bytes) / cfg.compute.decompress_bytes_per_s
                                 : seconds_since(t1);
      if (virtual_time) clock.sleep_for(m.decompress_seconds);

      double err_sum = 0.0;
      std::size_t err_count = 0;
      for (const auto& e : update.entries) {
        if (e.route != Route::lossy) continue;
        double eps = decode_blob(e.blob).eps_abs;
        auto a = local.at(e.name).f32();
        auto b = restored.at(e.name).f32();
        double worst = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
          double d = std::abs(static_cast<double>(a[k]) - static_cast<double>(b[k]));
          worst = std::max(worst, d);
          err_sum += d;
        }
        err_count += a.size();
        m.max_abs_error = std::max(m.max_abs_error, worst);
        m.max_eps_abs = std::max(m.max_eps_abs, eps);
        double rel = eps > 0.0 ? worst / eps : (worst > 0.0 ? INFINITY : 0.0);
        m.max_error_to_bound = std::max(m.max_error_to_bound, rel);
      }
      m.mean_abs_error = err_count ? err_sum / static_cast<double>(err_count) : 0.0;
    } else {
      m.compressed_bytes = m.original_bytes;
      m.transfer_seconds = emulate_send(static_cast<double>(m.original_bytes), cfg.network, clock, i);
      restored = local;
    }
    m.comm_seconds = m.compress_seconds + m.transfer_seconds + m.decompress_seconds;
    metrics.comm_seconds += m.comm_seconds;
    metrics.clients.push_back(m);
    if (observer) observer(round_idx, i, local, restored);
    received.push_back(std::move(restored));
    weights.push_back(static_cast<double>(local_data.size()));
  }

  auto next = fedavg_aggregate(received, weights);
  metrics.accuracy = evaluate(next, data.eval);
  metrics.wall_seconds = clock.now() - round_start;
  return {std::move(next), std::move(metrics)};
}

ExperimentReport run_experiment(const FLConfig& cfg, const UpdateObserver& observer, StateDict* final_state) {
  Simulation sim(cfg);
  ExperimentReport report;
  report.codec_label = cfg.codec ? codec_name(cfg.codec->codec) : "none";
  report.epsilon = cfg.codec ? cfg.codec->bound.epsilon : 0.0;
  double ratio_sum = 0.0;
  std::size_t ratio_count = 0;
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    auto [next, metrics] = run_round(sim.cfg, sim.data, *sim.clock, sim.global, r, observer);
    sim.global = std::move(next);
    for (const auto& c : metrics.clients) {
      ratio_sum += static_cast<double>(c.original_bytes) / static_cast<double>(c.compressed_bytes);
      ++ratio_count;
    }
    report.total_comm_seconds += metrics.comm_seconds;
    report.rounds.push_back(std::move(metrics));
  }
  report.final_accuracy = report.rounds.back().accuracy;
  report.mean_ratio = ratio_sum / static_cast<double>(ratio_count);
  if (final_state) *final_state = std::move(sim.global);
  return report;
}

SelectionGrid sweep_epsilon(const FLConfig& cfg, std::span<const double> epsilons) {
  if (epsilons.empty()) fail(Errc::InvalidConfig, "epsilon list must be non-empty");
  validate(cfg);
  CodecSpec spec = cfg.codec.value_or(CodecSpec{});

  SelectionGrid grid;
  grid.candidates.push_back(spec);
  grid.epsilons.assign(epsilons.begin(), epsilons.end());
  grid.records.emplace_back();
  grid.accuracy.emplace_back();

  auto baseline_cfg = cfg;
  baseline_cfg.codec.reset();
  grid.baseline_accuracy = run_experiment(baseline_cfg).final_accuracy;

  auto model = TinyNet(cfg.task.input_dim, cfg.hidden, cfg.task.num_classes).to_state();
  grid.original_bytes = static_cast<double>(model.payload_bytes());
  for (const auto& t : model) grid.element_count += static_cast<double>(t.size());

  for (double eps : epsilons) {
    auto run_cfg = cfg;
    run_cfg.codec = spec;
    run_cfg.codec->bound.epsilon = eps;
    auto report = run_experiment(run_cfg);

    CodecBenchRecord rec;
    rec.codec = spec.codec;
    rec.epsilon = eps;
    rec.ratio = report.mean_ratio;
    double n = 0.0, comp = 0.0, orig = 0.0, err = 0.0;
    for (const auto& round : report.rounds) {
      for (const auto& c : round.clients) {
        rec.compress_seconds += c.compress_seconds;
        rec.decompress_seconds += c.decompress_seconds;
        rec.max_abs_error = std::max(rec.max_abs_error, c.max_abs_error);
        rec.eps_abs = std::max(rec.eps_abs, c.max_eps_abs);
        err += c.mean_abs_error;
        comp += static_cast<double>(c.compressed_bytes);
        orig += static_cast<double>(c.original_bytes);
        n += 1.0;
      }
    }
    rec.compress_seconds /= n;
    rec.decompress_seconds /= n;
    rec.mean_abs_error = err / n;
    rec.original_bytes = static_cast<std::uint64_t>(std::llround(orig / n));
    rec.compressed_bytes = static_cast<std::uint64_t>(std::llround(comp / n));
    grid.records[0].push_back(rec);
    grid.accuracy[0].push_back(report.final_accuracy);
  }
  return grid;
}

}  // namespace fedzip::fl
