#include "wfl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "wfl/channel.hpp"
#include "wfl/errors.hpp"
#include "wfl/rng.hpp"
#include "wfl/training.hpp"

namespace wfl::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Paradigm-private streams (quantizer, outage, noise) are salted; sampler
// and channel streams are shared so paradigms see the same draws.
std::uint64_t salt_of(Paradigm p) {
  switch (p) {
    case Paradigm::digital: return 1;
    case Paradigm::analog: return 2;
    default: return 3;
  }
}

std::vector<double> per_device(const std::vector<double>& values, std::size_t K, double fallback,
                               const char* key) {
  if (values.empty()) return std::vector<double>(K, fallback);
  if (values.size() == 1) return std::vector<double>(K, values.front());
  if (values.size() != K)
    throw ConfigError(std::string(key) + " needs one value or one value per device");
  return values;
}

void check_config(const ExperimentConfig& cfg) {
  if (cfg.k < 1) throw ConfigError("k must be at least 1");
  if (cfg.n < 1) throw ConfigError("n must be at least 1");
  if (cfg.d < 1) throw ConfigError("d must be at least 1");
  if (cfg.b < 1 || cfg.b > digital::kMaxBits)
    throw ConfigError("b must lie in [1, " + std::to_string(digital::kMaxBits) + "]");
  if (cfg.q < 0) throw ConfigError("q must be nonnegative");
  if (cfg.m < 1) throw ConfigError("m must be at least 1");
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) throw ConfigError("eta must be positive");
  if (!(cfg.gamma_th >= 0.0) || !std::isfinite(cfg.gamma_th)) throw ConfigError("gamma_th must be nonnegative");
  if (!(cfg.rho > 0.0 && cfg.rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  if (!(cfg.bandwidth > 0.0) || !std::isfinite(cfg.bandwidth)) throw ConfigError("bandwidth must be positive");
  if (!(cfg.n0 > 0.0) || !std::isfinite(cfg.n0)) throw ConfigError("n0 must be positive");
  if (!(cfg.p_max > 0.0) || !std::isfinite(cfg.p_max)) throw ConfigError("p_max must be positive");
  if (cfg.t_max && !(*cfg.t_max > 0.0)) throw ConfigError("t_max must be positive");
  if (cfg.seeds.empty()) throw ConfigError("at least one seed is required");
}

double ideal_rate(const Scenario& s) {
  const auto& k = s.task.constants();
  const double eta = s.config.eta;
  return std::max(std::abs(1.0 - eta * k.mu), std::abs(1.0 - eta * k.L));
}

bounds::Paradigm to_bounds(Paradigm p) {
  return p == Paradigm::digital ? bounds::Paradigm::digital : bounds::Paradigm::analog;
}

void require_single(Paradigm p) {
  if (p == Paradigm::both) throw std::invalid_argument("a trial runs exactly one paradigm");
}

}  // namespace

Scenario build_scenario(const ExperimentConfig& cfg) {
  check_config(cfg);
  const auto K = static_cast<std::size_t>(cfg.k);
  if (cfg.n > cfg.k) throw InfeasibleConfig("n exceeds the number of devices k");
  if (cfg.n > cfg.m) throw InfeasibleConfig("n exceeds the number of subbands m");

  const double t_analog = analog::tx_delay_analog(cfg.d, cfg.m, cfg.bandwidth);
  const double t_max = cfg.t_max.value_or(t_analog);
  const bool uses_analog = cfg.paradigm == Paradigm::analog || cfg.paradigm == Paradigm::both;
  if (uses_analog && t_max < t_analog)
    throw InfeasibleConfig("t_max is below the analog delay d m / B");

  const auto alphas = per_device(cfg.alpha, K, 1.0 / cfg.k, "alpha");
  const auto inclusion =
      per_device(cfg.inclusion, K, static_cast<double>(cfg.n) / static_cast<double>(cfg.k), "inclusion");
  const double inclusion_total = std::accumulate(inclusion.begin(), inclusion.end(), 0.0);
  if (std::abs(inclusion_total - cfg.n) > 1e-9) throw ConfigError("inclusion probabilities must sum to n");
  std::vector<double> amplitudes;
  for (double db : per_device(cfg.path_loss_db, K, 0.0, "path_loss_db"))
    amplitudes.push_back(std::pow(10.0, db / 20.0));

  Rng task_rng = Rng::substream(cfg.task_seed, Stream::task, 0, 0);
  auto build_task = [&]() -> LearningTask {
    try {
      if (cfg.task_family == TaskFamily::quadratic) {
        QuadraticTaskSpec spec;
        spec.dimension = cfg.d;
        spec.devices = K;
        spec.heterogeneity = cfg.heterogeneity;
        spec.conditioning = cfg.conditioning;
        spec.init_distance = cfg.init_distance;
        spec.alphas = alphas;
        return make_quadratic_task(spec, task_rng);
      }
      LogisticTaskSpec spec;
      spec.dimension = cfg.d;
      spec.devices = K;
      spec.samples_per_device = cfg.samples_per_device;
      spec.heterogeneity = cfg.heterogeneity;
      spec.regularization = cfg.regularization;
      spec.alphas = alphas;
      return make_logistic_task(spec, task_rng);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };

  Scenario s{cfg, build_task(), t_max, {}, {}, {}, false, false};
  try {
    s.task.assign_inclusions(inclusion);
    s.task.assign_path_losses(amplitudes);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const channel::RadioParams radio{cfg.bandwidth, cfg.n0, cfg.p_max, cfg.m, cfg.rho};

  s.digital.radio = radio;
  s.digital.participants = cfg.n;
  s.digital.bits = cfg.b;
  s.digital.theta = digital::min_theta(cfg.n, cfg.d, cfg.b, cfg.bandwidth, t_max);
  s.digital.t_max = t_max;
  s.digital.outage = cfg.outage_mode;
  s.digital.convention = cfg.digital_convention;

  s.analog.radio = radio;
  s.analog.gamma_th = cfg.gamma_th;
  s.analog.t_max = t_max;
  s.analog.zeta_mode = cfg.zeta_mode;
  s.analog.convention = cfg.analog_convention;
  s.analog.gradient_bound = s.task.constants().gamma;

  auto& in = s.bound_inputs;
  in.constants = s.task.constants();
  in.eta = cfg.eta;
  in.alphas = s.task.alphas();
  in.inclusion = s.task.inclusions();
  in.path_loss = s.task.path_losses();
  in.success.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    in.success[k] = channel::success_probability(s.digital.theta, cfg.bandwidth, cfg.n, cfg.p_max,
                                                 in.path_loss[k], cfg.n0, cfg.digital_convention);
  in.bits = cfg.b;
  in.gamma_th = cfg.gamma_th;
  in.rho = cfg.rho;
  in.bandwidth = cfg.bandwidth;
  in.noise_density = cfg.n0;
  in.p_max = cfg.p_max;
  in.dimension = cfg.d;
  in.init_dist2 = (s.task.initial_weights() - s.task.global_optimum()).squaredNorm();
  in.theta = s.digital.theta;
  in.subbands = cfg.m;
  in.participants = cfg.n;

  const auto feasible = [&](bounds::Paradigm p) {
    try {
      return bounds::eta_feasible(in, p);
    } catch (const std::domain_error&) {
      return false;
    }
  };
  s.eta_feasible_digital = feasible(bounds::Paradigm::digital);
  s.eta_feasible_analog = feasible(bounds::Paradigm::analog);
  return s;
}

std::vector<Paradigm> expand(Paradigm paradigm) {
  if (paradigm == Paradigm::both) return {Paradigm::digital, Paradigm::analog};
  return {paradigm};
}

bool eta_feasible(const Scenario& s, Paradigm paradigm) {
  require_single(paradigm);
  switch (paradigm) {
    case Paradigm::digital: return s.eta_feasible_digital;
    case Paradigm::analog: return s.eta_feasible_analog;
    default: return ideal_rate(s) < 1.0;
  }
}

std::vector<double> bound_trajectory(const Scenario& s, Paradigm paradigm, std::size_t rounds) {
  if (!eta_feasible(s, paradigm)) return std::vector<double>(rounds, kNaN);
  if (paradigm == Paradigm::ideal) {
    const double q2 = ideal_rate(s) * ideal_rate(s);
    const double scale = 0.5 * s.task.constants().L * s.bound_inputs.init_dist2;
    std::vector<double> out(rounds);
    for (std::size_t m = 0; m < rounds; ++m) out[m] = scale * std::pow(q2, static_cast<double>(m + 1));
    return out;
  }
  return bounds::gap_bound_trajectory(s.bound_inputs, to_bounds(paradigm), rounds);
}

double bound_limit(const Scenario& s, Paradigm paradigm) {
  if (!eta_feasible(s, paradigm)) return kNaN;
  if (paradigm == Paradigm::ideal) return 0.0;
  return bounds::limit_gap(s.bound_inputs, to_bounds(paradigm));
}

double bound_asymptote(const Scenario& s, Paradigm paradigm) {
  if (!eta_feasible(s, paradigm)) return kNaN;
  if (paradigm == Paradigm::ideal) return 0.0;
  try {
    return paradigm == Paradigm::digital ? bounds::asymptote_digital(s.bound_inputs)
                                         : bounds::asymptote_analog(s.bound_inputs);
  } catch (const std::domain_error&) {
    return kNaN;
  }
}

std::vector<RoundTrace> run_trial(const Scenario& s, Paradigm paradigm, std::uint64_t seed) {
  require_single(paradigm);
  const auto& cfg = s.config;
  const auto& task = s.task;
  const std::size_t K = task.num_devices();
  const auto inclusion = task.inclusions();
  const double gamma = task.constants().gamma;
  const auto bound = bound_trajectory(s, paradigm, cfg.rounds);
  const auto convention =
      paradigm == Paradigm::digital ? cfg.digital_convention : cfg.analog_convention;

  ModelState state{0, task.initial_weights()};
  std::vector<RoundTrace> trace;
  trace.reserve(cfg.rounds);
  std::vector<channel::ChannelRealization> channels(K);

  for (std::size_t m = 0; m < cfg.rounds; ++m) {
    RoundTrace row;
    row.round = m;
    const Vector g = task.global_gradient(state.weights);
    Vector g_hat;

    if (paradigm == Paradigm::ideal) {
      g_hat = g;
      row.successes = K;
    } else {
      for (std::size_t k = 0; k < K; ++k) {
        if (task.local_gradient(k, state.weights).norm() > gamma * (1.0 + 1e-9))
          throw TrialAborted("seed " + std::to_string(seed) + ", round " + std::to_string(m) +
                             ": local gradient of device " + std::to_string(k) +
                             " exceeds the gradient bound");
      }
      const RoundStreams shared{seed, m, 0};
      const RoundStreams own{seed, m, salt_of(paradigm)};
      Rng sampler = shared.stream(Stream::sampler, 0);
      const auto participants = sample_participants(inclusion, static_cast<std::size_t>(cfg.n), sampler);
      for (std::size_t k = 0; k < K; ++k) {
        Rng ch = shared.stream(Stream::channel, k);
        channels[k] = channel::draw_channel(cfg.rho, convention, ch);
      }
      if (paradigm == Paradigm::digital) {
        const auto out = digital::digital_round(task, state, participants, channels, s.digital, own);
        if (!(out.delay <= s.t_max)) throw std::logic_error("digital delay exceeds T_max");
        if (!(out.transmit_power <= cfg.p_max)) throw std::logic_error("digital power exceeds P_max");
        g_hat = out.g_hat;
        row.delay = out.delay;
        row.successes = out.successes;
        row.max_power = out.transmit_power;
      } else {
        const auto out = analog::analog_round(task, state, participants, channels, s.analog, own);
        if (!(out.delay <= s.t_max)) throw std::logic_error("analog delay exceeds T_max");
        if (!(out.max_power <= cfg.p_max)) throw std::logic_error("analog power exceeds P_max");
        g_hat = out.g_hat;
        row.delay = out.delay;
        row.successes = participants.size() - out.truncations;
        row.truncations = out.truncations;
        row.max_power = out.max_power;
        row.zeta_fallback = out.zeta_fallback;
      }
    }

    row.mse = (g_hat - g).squaredNorm();
    state = sgd_step(state, g_hat, cfg.eta);
    row.gap = optimality_gap(task, state);
    row.bound = bound[m];
    row.accuracy = task.holdout_accuracy(state.weights);
    trace.push_back(row);
  }
  return trace;
}

std::vector<std::vector<RoundTrace>> run_seeds(const Scenario& s, Paradigm paradigm,
                                               const std::vector<std::uint64_t>& seeds) {
  require_single(paradigm);
  std::vector<std::vector<RoundTrace>> results(seeds.size());
  unsigned workers = s.config.threads ? s.config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, seeds.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        results[i] = run_trial(s, paradigm, seeds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = seeds.size();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

SeedAverage average(const std::vector<std::vector<RoundTrace>>& traces) {
  SeedAverage avg;
  if (traces.empty()) return avg;
  const std::size_t rounds = traces.front().size();
  const double n = static_cast<double>(traces.size());
  for (const auto& t : traces)
    if (t.size() != rounds) throw std::invalid_argument("traces differ in length");

  avg.mean_gap.assign(rounds, 0.0);
  avg.stderr_gap.assign(rounds, 0.0);
  avg.mean_mse.assign(rounds, 0.0);
  avg.mean_successes.assign(rounds, 0.0);
  avg.mean_truncations.assign(rounds, 0.0);
  avg.delay.assign(rounds, 0.0);
  avg.bound.assign(rounds, 0.0);
  for (std::size_t m = 0; m < rounds; ++m) {
    double sum = 0.0;
    for (const auto& t : traces) {
      sum += t[m].gap;
      avg.mean_mse[m] += t[m].mse / n;
      avg.mean_successes[m] += static_cast<double>(t[m].successes) / n;
      avg.mean_truncations[m] += static_cast<double>(t[m].truncations) / n;
      avg.delay[m] = std::max(avg.delay[m], t[m].delay);
      avg.max_power = std::max(avg.max_power, t[m].max_power);
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& t : traces) ss += (t[m].gap - mean) * (t[m].gap - mean);
    avg.mean_gap[m] = mean;
    avg.stderr_gap[m] = traces.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    avg.bound[m] = traces.front()[m].bound;
  }
  return avg;
}

CsvTable trace_table(const std::vector<RoundTrace>& trace) {
  CsvTable table(kTraceHeader);
  for (const auto& r : trace)
    table.add_row({std::to_string(r.round), format_number(r.gap), format_number(r.mse), format_number(r.bound),
                   format_number(r.delay), std::to_string(r.successes), std::to_string(r.truncations)});
  return table;
}

CsvTable average_table(const SeedAverage& avg) {
  auto header = kTraceHeader;
  header.push_back("m_gap_stderr");
  CsvTable table(header);
  for (std::size_t m = 0; m < avg.mean_gap.size(); ++m)
    table.add_row({std::to_string(m), format_number(avg.mean_gap[m]), format_number(avg.mean_mse[m]),
                   format_number(avg.bound[m]), format_number(avg.delay[m]),
                   format_number(avg.mean_successes[m]), format_number(avg.mean_truncations[m]),
                   format_number(avg.stderr_gap[m])});
  return table;
}

void write_run(const Scenario& s, const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (Paradigm p : expand(s.config.paradigm)) {
    const auto traces = run_seeds(s, p, seeds);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const std::string stem = to_string(p) + "_seed" + std::to_string(seeds[i]);
      trace_table(traces[i]).save(out_dir / ("trace_" + stem + ".csv"));
      if (s.config.task_family == TaskFamily::logistic) {
        CsvTable acc({"round", "accuracy"});
        for (const auto& r : traces[i])
          acc.add_row({std::to_string(r.round), format_number(r.accuracy.value_or(kNaN))});
        acc.save(out_dir / ("accuracy_" + stem + ".csv"));
      }
    }
  }
  std::ofstream(out_dir / "config.cfg", std::ios::binary | std::ios::trunc) << format_config(s.config);
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep || cfg.sweep->param.empty() || cfg.sweep->values.empty())
    throw ConfigError("sweep needs a parameter name and at least one value");
  std::vector<SweepPoint> points;
  for (const auto& value : cfg.sweep->values) {
    ExperimentConfig point_cfg = cfg;
    point_cfg.sweep.reset();
    apply_setting(point_cfg, cfg.sweep->param, value);

    std::optional<Scenario> scenario;
    std::string note;
    try {
      scenario = build_scenario(point_cfg);
    } catch (const InfeasibleConfig& e) {
      note = e.what();
    }

    for (Paradigm p : expand(point_cfg.paradigm)) {
      SweepPoint pt;
      pt.value = value;
      pt.paradigm = p;
      pt.mean_final_gap = pt.stderr_final_gap = pt.bound_limit = pt.bound_asymptote = kNaN;
      pt.note = note;
      if (scenario) {
        pt.eta_feasible = eta_feasible(*scenario, p);
        pt.bound_limit = bound_limit(*scenario, p);
        pt.bound_asymptote = bound_asymptote(*scenario, p);
        try {
          auto avg = average(run_seeds(*scenario, p, point_cfg.seeds));
          pt.feasible = true;
          if (!avg.mean_gap.empty()) {
            pt.mean_final_gap = avg.mean_gap.back();
            pt.stderr_final_gap = avg.stderr_gap.back();
          }
          pt.average = std::move(avg);
        } catch (const InfeasibleConfig& e) {
          pt.note = e.what();
        } catch (const TrialAborted& e) {
          pt.note = e.what();
        }
      }
      points.push_back(std::move(pt));
    }
  }
  return points;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  auto points = run_sweep(cfg);
  std::filesystem::create_directories(out_dir);
  CsvTable summary({"sweep_value", "paradigm", "mean_final_gap", "stderr", "bound_limit", "bound_asymptote",
                    "feasible", "eta_feasible"});
  std::size_t index = 0;
  std::string previous;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    if (i > 0 && pt.value != previous) ++index;
    previous = pt.value;
    if (pt.average)
      average_table(*pt.average)
          .save(out_dir / ("point_" + std::to_string(index) + "_" + to_string(pt.paradigm) + ".csv"));
    summary.add_row({pt.value, to_string(pt.paradigm), format_number(pt.mean_final_gap),
                     format_number(pt.stderr_final_gap), format_number(pt.bound_limit),
                     format_number(pt.bound_asymptote), pt.feasible ? "1" : "0", pt.eta_feasible ? "1" : "0"});
  }
  summary.save(out_dir / "summary.csv");
  return points;
}

CsvTable bound_overlay(const Scenario& s, Paradigm paradigm) {
  require_single(paradigm);
  if (!eta_feasible(s, paradigm))
    throw InfeasibleConfig("learning rate " + format_number(s.config.eta) +
                           " violates the convergence hypothesis for " + to_string(paradigm));
  const auto& cfg = s.config;
  const auto trajectory = bound_trajectory(s, paradigm, cfg.rounds);
  const double limit = bound_limit(s, paradigm);
  const double asymptote = bound_asymptote(s, paradigm);
  const auto& in = s.bound_inputs;

  double delay = 0.0;
  double successes = static_cast<double>(cfg.k);
  double truncations = 0.0;
  if (paradigm == Paradigm::digital) {
    delay = digital::tx_delay_digital(cfg.n, cfg.d, cfg.b, cfg.bandwidth, s.digital.theta);
    successes = 0.0;
    for (std::size_t k = 0; k < in.success.size(); ++k) successes += in.inclusion[k] * in.success[k];
  } else if (paradigm == Paradigm::analog) {
    delay = analog::tx_delay_analog(cfg.d, cfg.m, cfg.bandwidth);
    const double kept = channel::truncation_probability(cfg.gamma_th, cfg.analog_convention);
    successes = cfg.n * kept;
    truncations = cfg.n * (1.0 - kept);
  }

  auto header = kTraceHeader;
  header.push_back("limit");
  header.push_back("asymptote");
  CsvTable table(header);
  for (std::size_t m = 0; m < trajectory.size(); ++m)
    table.add_row({std::to_string(m), format_number(kNaN), format_number(kNaN), format_number(trajectory[m]),
                   format_number(delay), format_number(successes), format_number(truncations),
                   format_number(limit), format_number(asymptote)});
  return table;
}

void emit_bound_overlay(const Scenario& s, const std::filesystem::path& out_dir) {
  std::vector<std::pair<Paradigm, CsvTable>> tables;
  for (Paradigm p : expand(s.config.paradigm)) tables.emplace_back(p, bound_overlay(s, p));
  std::filesystem::create_directories(out_dir);
  for (const auto& [p, table] : tables) table.save(out_dir / ("bounds_" + to_string(p) + ".csv"));

  const auto report = bounds::evaluate(s.bound_inputs, 0);
  const auto& k = s.task.constants();
  CsvTable summary({"key", "value"});
  const auto put = [&summary](const std::string& key, double v) { summary.add_row({key, format_number(v)}); };
  put("mu", k.mu);
  put("L", k.L);
  put("gamma", k.gamma);
  put("delta", k.delta);
  put("init_dist2", s.bound_inputs.init_dist2);
  put("t_max", s.t_max);
  put("theta", s.digital.theta);
  put("g_d", report.g_d);
  put("g_a", report.g_a);
  put("c", report.c);
  put("phi", report.phi);
  put("varphi", report.varphi);
  put("varphi_d_scaled", report.varphi_d_scaled);
  put("max_eta_d", report.max_eta_d);
  put("max_eta_a", report.max_eta_a);
  put("limit_d", report.limit_d);
  put("limit_a", report.limit_a);
  put("asymptote_d", report.asymptote_d);
  put("asymptote_a", report.asymptote_a);
  put("epsilon", report.rates.epsilon);
  put("epsilon1", report.rates.epsilon1);
  put("epsilon2", report.rates.epsilon2);
  summary.save(out_dir / "bounds_summary.csv");
}

}  // namespace wfl::harness
