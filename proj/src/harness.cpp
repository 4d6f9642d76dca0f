#include "pl2o/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pl2o/parallel.hpp"

namespace pl2o {

Dataset gen_dataset(std::size_t n_antennas, std::size_t n_users, std::size_t count,
                    double sigma2, double gamma, std::uint64_t seed) {
  if (n_antennas < 1 || n_users < 1 || count < 1)
    throw std::invalid_argument("gen_dataset: K, N and count must be >= 1");
  Dataset ds;
  ds.n_antennas = n_antennas;
  ds.n_users = n_users;
  ds.sigma2 = sigma2;
  ds.gamma = gamma;
  ds.seed = seed;
  ds.instances.reserve(count);
  Rng rng(seed);
  for (std::size_t c = 0; c < count; ++c) {
    ChannelSet ch;
    ch.n_users = n_users;
    ch.n_antennas = n_antennas;
    ch.sigma2 = sigma2;
    ch.gamma.assign(n_users, gamma);
    ch.h.reserve(n_users * n_users);
    ch.g.reserve(n_users * n_users);
    for (std::size_t i = 0; i < n_users * n_users; ++i)
      ch.h.push_back(cgauss_sample(rng, n_antennas));
    for (std::size_t i = 0; i < n_users * n_users; ++i)
      ch.g.push_back(cgauss_sample(rng, n_antennas));
    ds.instances.push_back(std::move(ch));
  }
  return ds;
}

namespace {

constexpr char kDataMagic[8] = {'P', 'L', '2', 'O', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kDataVersion = 1;

void put(std::ofstream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void get(std::ifstream& in, void* data, std::size_t size) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (!in) throw std::runtime_error("dataset: truncated file");
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  Rng r(base ^ (a * 0xD1B54A32D192ED03ULL) ^ (b * 0x9E3779B97F4A7C15ULL));
  return r.next_u64();
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("dataset: cannot open '" + path + "' for writing");
  put(out, kDataMagic, sizeof(kDataMagic));
  put(out, &kDataVersion, sizeof(kDataVersion));
  const std::uint64_t k = ds.n_antennas, n = ds.n_users, count = ds.instances.size();
  put(out, &k, sizeof(k));
  put(out, &n, sizeof(n));
  put(out, &count, sizeof(count));
  put(out, &ds.sigma2, sizeof(ds.sigma2));
  put(out, &ds.gamma, sizeof(ds.gamma));
  put(out, &ds.seed, sizeof(ds.seed));
  for (const auto& ch : ds.instances) {
    for (const auto& c : ch.h) put(out, c.re_im.data(), sizeof(double) * c.re_im.size());
    for (const auto& c : ch.g) put(out, c.re_im.data(), sizeof(double) * c.re_im.size());
  }
  if (!out) throw std::runtime_error("dataset: write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dataset: cannot open '" + path + "'");
  char magic[8];
  get(in, magic, sizeof(magic));
  if (std::memcmp(magic, kDataMagic, sizeof(kDataMagic)) != 0)
    throw std::runtime_error("dataset: bad magic in '" + path + "'");
  std::uint32_t version = 0;
  get(in, &version, sizeof(version));
  if (version != kDataVersion) throw std::runtime_error("dataset: unsupported version");

  std::uint64_t k = 0, n = 0, count = 0;
  get(in, &k, sizeof(k));
  get(in, &n, sizeof(n));
  get(in, &count, sizeof(count));
  Dataset ds;
  ds.n_antennas = k;
  ds.n_users = n;
  get(in, &ds.sigma2, sizeof(ds.sigma2));
  get(in, &ds.gamma, sizeof(ds.gamma));
  get(in, &ds.seed, sizeof(ds.seed));
  ds.instances.reserve(count);
  for (std::uint64_t c = 0; c < count; ++c) {
    ChannelSet ch;
    ch.n_users = n;
    ch.n_antennas = k;
    ch.sigma2 = ds.sigma2;
    ch.gamma.assign(n, ds.gamma);
    ch.h.assign(n * n, ComplexVec(k));
    ch.g.assign(n * n, ComplexVec(k));
    for (auto& cv : ch.h) get(in, cv.re_im.data(), sizeof(double) * cv.re_im.size());
    for (auto& cv : ch.g) get(in, cv.re_im.data(), sizeof(double) * cv.re_im.size());
    ds.instances.push_back(std::move(ch));
  }
  return ds;
}

namespace {

struct InstanceOutcome {
  double objective = 0.0;
  bool raw_feasible = false;
  bool post_feasible = false;
  bool failed = false;
  double seconds = 0.0;
};

// Two-pass mean/variance over the non-failed outcomes.
SweepRecord reduce_outcomes(const std::vector<InstanceOutcome>& outcomes,
                            const std::string& algorithm, const std::string& axis,
                            double axis_value, bool timing) {
  SweepRecord rec;
  rec.algorithm = algorithm;
  rec.axis = axis;
  rec.axis_value = axis_value;
  std::size_t used = 0;
  double sum = 0.0, raw = 0.0, post = 0.0, time_sum = 0.0;
  for (const auto& o : outcomes) {
    if (o.failed) {
      ++rec.failures;
      continue;
    }
    ++used;
    sum += o.objective;
    raw += o.raw_feasible ? 1.0 : 0.0;
    post += o.post_feasible ? 1.0 : 0.0;
    time_sum += o.seconds;
  }
  if (used == 0) return rec;
  const double mean = sum / static_cast<double>(used);
  double ss = 0.0;
  for (const auto& o : outcomes) {
    if (o.failed) continue;
    const double d = o.objective - mean;
    ss += d * d;
  }
  rec.mean_objective = mean;
  rec.objective_variance = ss / static_cast<double>(used);
  rec.raw_feasibility_rate = raw / static_cast<double>(used);
  rec.post_feasibility_rate = post / static_cast<double>(used);
  rec.mean_time_sec = timing ? time_sum / static_cast<double>(used) : 0.0;
  return rec;
}

bool is_nn_algorithm(const std::string& algo) {
  return algo == "l2o" || algo == "penalty";
}

}  // namespace

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg) {
  if (cfg.axis != "K" && cfg.axis != "N" && cfg.axis != "gamma")
    throw std::invalid_argument("run_sweep: axis must be K, N or gamma");
  std::vector<SweepRecord> records;
  if (cfg.algorithms.empty() || cfg.values.empty()) return records;

  // The gamma axis reuses one network per NN algorithm (input dim is
  // gamma-independent); K and N sweeps retrain per value.
  std::optional<MlpParams> cached_l2o, cached_penalty;

  for (std::size_t vi = 0; vi < cfg.values.size(); ++vi) {
    const double value = cfg.values[vi];
    std::size_t k_ant = cfg.base_antennas, n_users = cfg.base_users;
    double gamma = cfg.gamma;
    if (cfg.axis == "K") k_ant = static_cast<std::size_t>(value);
    if (cfg.axis == "N") n_users = static_cast<std::size_t>(value);
    if (cfg.axis == "gamma") gamma = value;

    const bool reuse_network = (cfg.axis == "gamma");
    const double train_gamma = reuse_network ? cfg.gamma : gamma;
    const bool needs_nn = std::any_of(cfg.algorithms.begin(), cfg.algorithms.end(),
                                      is_nn_algorithm);
    const bool need_train = needs_nn && !(reuse_network && vi > 0);

    // One dataset per point, split train/eval (80/20 at the default counts).
    // Training instances keep the base gamma on the reused-network axis; the
    // swept gamma applies to the evaluation split.
    const std::size_t total = (need_train ? cfg.train_count : 0) + cfg.eval_count;
    Dataset ds = gen_dataset(k_ant, n_users, total, cfg.sigma2, train_gamma,
                             mix_seed(cfg.seed, vi, 1));
    std::vector<const ChannelSet*> eval_set;
    for (std::size_t i = (need_train ? cfg.train_count : 0); i < ds.instances.size();
         ++i) {
      ds.instances[i].gamma.assign(n_users, gamma);
      eval_set.push_back(&ds.instances[i]);
    }
    std::vector<ChannelSet> train_split;
    if (need_train)
      train_split.assign(ds.instances.begin(), ds.instances.begin() + cfg.train_count);

    for (const std::string& algo : cfg.algorithms) {
      const MlpParams* net = nullptr;
      MlpParams trained;
      if (algo == "l2o") {
        if (reuse_network && cached_l2o) {
          net = &*cached_l2o;
        } else {
          TrainConfig tc = cfg.train;
          tc.seed = mix_seed(cfg.seed, reuse_network ? 0xBA5E : vi, 7);
          tc.threads = cfg.threads;
          trained = train(train_split, tc).params;
          if (reuse_network) {
            cached_l2o = std::move(trained);
            net = &*cached_l2o;
          } else {
            net = &trained;
          }
        }
      } else if (algo == "penalty") {
        if (reuse_network && cached_penalty) {
          net = &*cached_penalty;
        } else {
          PenaltyConfig pc;
          pc.penalty_weight = cfg.penalty_weight;
          pc.base = cfg.train;
          pc.base.seed = mix_seed(cfg.seed, reuse_network ? 0xBA5E : vi, 8);
          pc.base.threads = cfg.threads;
          trained = penalty_train(train_split, pc).params;
          if (reuse_network) {
            cached_penalty = std::move(trained);
            net = &*cached_penalty;
          } else {
            net = &trained;
          }
        }
      } else if (algo != "sca" && algo != "trust") {
        throw std::invalid_argument("run_sweep: unknown algorithm '" + algo + "'");
      }

      std::vector<InstanceOutcome> outcomes(eval_set.size());
      parallel_for(eval_set.size(), cfg.threads, [&](std::size_t i) {
        const ChannelSet& ch = *eval_set[i];
        InstanceOutcome& out = outcomes[i];
        const auto t0 = std::chrono::steady_clock::now();
        try {
          Beamformer final_w;
          if (net != nullptr) {
            const std::vector<double> x = forward(*net, assemble_features(ch));
            final_w = Beamformer::unflatten(x, ch.n_users, ch.n_antennas);
            out.raw_feasible = is_feasible(final_w, ch, kExternalFeasTol);
            if (!out.raw_feasible)
              final_w = project(final_w, ch, cfg.train.projector).y;
          } else {
            const Beamformer init = zf_init(ch, 2.0);
            final_w = (algo == "sca")
                          ? sca_solve(ch, cfg.problem, init, cfg.solver)
                          : trust_region_solve(ch, cfg.problem, init, cfg.solver);
            out.raw_feasible = is_feasible(final_w, ch, kExternalFeasTol);
          }
          out.objective = objective(final_w, ch, cfg.problem);
          out.post_feasible = is_feasible(final_w, ch, kExternalFeasTol);
        } catch (const std::exception&) {
          out.failed = true;
        }
        out.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      });
      records.push_back(
          reduce_outcomes(outcomes, algo, cfg.axis, value, cfg.timing));
    }
  }
  return records;
}

namespace {

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

const char* kCsvHeader =
    "algorithm,axis,axis_value,mean_objective,objective_variance,"
    "raw_feasibility_rate,post_feasibility_rate,mean_time_sec,failures";

}  // namespace

void export_records(const std::vector<SweepRecord>& records, const std::string& path,
                    ExportFormat format) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("export: cannot open '" + path + "' for writing");
  if (format == ExportFormat::kCsv) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
      out << r.algorithm << ',' << r.axis << ',' << fmt9(r.axis_value) << ','
          << fmt9(r.mean_objective) << ',' << fmt9(r.objective_variance) << ','
          << fmt9(r.raw_feasibility_rate) << ',' << fmt9(r.post_feasibility_rate)
          << ',' << fmt9(r.mean_time_sec) << ',' << r.failures << '\n';
    }
  } else {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : records) {
      nlohmann::ordered_json obj;
      obj["algorithm"] = r.algorithm;
      obj["axis"] = r.axis;
      obj["axis_value"] = r.axis_value;
      obj["mean_objective"] = r.mean_objective;
      obj["objective_variance"] = r.objective_variance;
      obj["raw_feasibility_rate"] = r.raw_feasibility_rate;
      obj["post_feasibility_rate"] = r.post_feasibility_rate;
      obj["mean_time_sec"] = r.mean_time_sec;
      obj["failures"] = r.failures;
      arr.push_back(obj);
    }
    out << arr.dump(2) << '\n';
  }
  if (!out) throw std::runtime_error("export: write failed for '" + path + "'");
}

std::vector<SweepRecord> import_records(const std::string& path, ExportFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import: cannot open '" + path + "'");
  std::vector<SweepRecord> records;
  if (format == ExportFormat::kCsv) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("import: empty CSV");
    if (line != kCsvHeader) throw std::runtime_error("import: unexpected CSV header");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (fields.size() != 9) throw std::runtime_error("import: malformed CSV row");
      SweepRecord r;
      r.algorithm = fields[0];
      r.axis = fields[1];
      r.axis_value = std::stod(fields[2]);
      r.mean_objective = std::stod(fields[3]);
      r.objective_variance = std::stod(fields[4]);
      r.raw_feasibility_rate = std::stod(fields[5]);
      r.post_feasibility_rate = std::stod(fields[6]);
      r.mean_time_sec = std::stod(fields[7]);
      r.failures = std::stoul(fields[8]);
      records.push_back(std::move(r));
    }
  } else {
    nlohmann::json arr = nlohmann::json::parse(in);
    for (const auto& obj : arr) {
      SweepRecord r;
      r.algorithm = obj.at("algorithm").get<std::string>();
      r.axis = obj.at("axis").get<std::string>();
      r.axis_value = obj.at("axis_value").get<double>();
      r.mean_objective = obj.at("mean_objective").get<double>();
      r.objective_variance = obj.at("objective_variance").get<double>();
      r.raw_feasibility_rate = obj.at("raw_feasibility_rate").get<double>();
      r.post_feasibility_rate = obj.at("post_feasibility_rate").get<double>();
      r.mean_time_sec = obj.at("mean_time_sec").get<double>();
      r.failures = obj.at("failures").get<std::size_t>();
      records.push_back(std::move(r));
    }
  }
  return records;
}

}  // namespace pl2o
