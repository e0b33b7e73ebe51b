#include "infmcmc/runner.hpp"
#include "infmcmc/errors.hpp"
#include "infmcmc/groundwater.hpp"
#include "infmcmc/linear_gaussian.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

namespace infmcmc {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

bool non_negative_integer(const json &v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

/// Typed access to one JSON object that reports errors by key path and
/// rejects keys it was never asked about.
class Fields {
public:
  Fields(const json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object())
      throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string &k) const {
    return path_.empty() ? k : path_ + "." + k;
  }

  bool has(const std::string &k) {
    seen_.insert(k);
    return obj_.contains(k);
  }

  template <class T> T get(const std::string &k) {
    if (!has(k))
      throw ConfigError(key(k), "required");
    try {
      return obj_.at(k).get<T>();
    } catch (const json::exception &) {
      throw ConfigError(key(k), "has the wrong type");
    }
  }

  template <class T> T get(const std::string &k, T fallback) {
    return has(k) ? get<T>(k) : fallback;
  }

  std::uint64_t seed(const std::string &k) {
    const json &v = raw(k);
    if (!non_negative_integer(v))
      throw ConfigError(key(k), "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  const json &raw(const std::string &k) {
    if (!has(k))
      throw ConfigError(key(k), "required");
    return obj_.at(k);
  }

  void ignore(const std::string &k) { seen_.insert(k); }

  void finish() const {
    for (const auto &item : obj_.items())
      if (!seen_.count(item.key()))
        throw ConfigError(key(item.key()), "unknown key");
  }

private:
  const json &obj_;
  std::string path_;
  std::set<std::string> seen_;
};

KLPrior make_prior(const PriorSpec &spec) {
  if (spec.kind == "2d")
    return KLPrior::cosine_2d(spec.hyper, spec.cap);
  if (spec.kind == "1d")
    return KLPrior::cosine_1d(spec.hyper, spec.cap);
  return KLPrior::from_eigenvalues(spec.eigenvalues);
}

PriorSpec parse_prior(Fields f) {
  PriorSpec p;
  p.kind = f.get<std::string>("kind", "2d");
  if (p.kind == "explicit") {
    p.eigenvalues = f.get<std::vector<double>>("eigenvalues");
    if (p.eigenvalues.empty())
      throw ConfigError(f.key("eigenvalues"), "must not be empty");
    for (double v : p.eigenvalues)
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(f.key("eigenvalues"), "must be positive and finite");
    p.cap = static_cast<int>(p.eigenvalues.size());
    f.finish();
    return p;
  }
  if (p.kind != "2d" && p.kind != "1d")
    throw ConfigError(f.key("kind"), "must be 2d, 1d or explicit");
  p.hyper.alpha = f.get<double>("alpha", p.kind == "2d" ? 0.0 : 1.0);
  p.hyper.sigma2 = f.get<double>("sigma2", 1.0);
  p.hyper.s = f.get<double>("s", p.kind == "2d" ? 1.1 : 0.8);
  p.cap = f.get<int>("cap", 10);
  if (!(p.hyper.sigma2 > 0.0))
    throw ConfigError(f.key("sigma2"), "must be positive");
  if (p.cap < 1)
    throw ConfigError(f.key("cap"), "must be at least 1");
  if (p.kind == "2d") {
    if (!(p.hyper.s > 1.0))
      throw ConfigError(f.key("s"), "must exceed 1 for a trace-class 2D prior");
    if (!(p.hyper.alpha >= 0.0))
      throw ConfigError(f.key("alpha"), "must be non-negative");
  } else {
    if (!(p.hyper.s > 0.5))
      throw ConfigError(f.key("s"), "must exceed 1/2 for a trace-class 1D prior");
    if (!(p.hyper.alpha > 0.0))
      throw ConfigError(f.key("alpha"), "must be positive in 1D (mode 0 is kept)");
  }
  f.finish();
  return p;
}

void check_stations_inside(const GroundwaterSpec &g, int cells, const std::string &key) {
  const double lo = 0.5 / cells, hi = 1.0 - 0.5 / cells;
  for (int axis = 0; axis < 2; ++axis) {
    if (g.station_centre[axis] - g.station_radius < lo ||
        g.station_centre[axis] + g.station_radius > hi)
      throw ConfigError(key, "stations must lie inside the cell-centre hull of every mesh");
  }
}

GroundwaterSpec parse_groundwater(Fields f, const PriorSpec &prior) {
  if (prior.kind != "2d")
    throw ConfigError("prior.kind", "the groundwater model needs a 2d prior");
  GroundwaterSpec g;
  g.inference_mesh = f.get<int>("inference_mesh", g.inference_mesh);
  g.data_mesh = f.get<int>("data_mesh", g.data_mesh);
  g.noise_variance = f.get<double>("noise_variance", g.noise_variance);
  g.data_seed = f.seed("data_seed");
  if (f.has("stations")) {
    Fields s(f.raw("stations"), f.key("stations"));
    g.station_count = s.get<int>("count", g.station_count);
    g.station_centre = s.get<std::array<double, 2>>("center", g.station_centre);
    g.station_radius = s.get<double>("radius", g.station_radius);
    s.finish();
  }
  if (g.inference_mesh < 2)
    throw ConfigError(f.key("inference_mesh"), "must be at least 2");
  if (g.data_mesh < 2)
    throw ConfigError(f.key("data_mesh"), "must be at least 2");
  if (!(g.noise_variance > 0.0))
    throw ConfigError(f.key("noise_variance"), "must be positive");
  if (g.station_count < 1)
    throw ConfigError(f.key("stations.count"), "must be at least 1");
  if (!(g.station_radius > 0.0))
    throw ConfigError(f.key("stations.radius"), "must be positive");
  check_stations_inside(g, g.inference_mesh, f.key("stations"));
  check_stations_inside(g, g.data_mesh, f.key("stations"));
  f.finish();
  return g;
}

LinearGaussianSpec parse_linear(Fields f) {
  LinearGaussianSpec l;
  l.obs = f.get<int>("obs", l.obs);
  l.noise_variance = f.get<double>("noise_variance", l.noise_variance);
  l.design_seed = f.seed("design_seed");
  l.data_seed = f.seed("data_seed");
  if (l.obs < 1)
    throw ConfigError(f.key("obs"), "must be at least 1");
  if (!(l.noise_variance > 0.0))
    throw ConfigError(f.key("noise_variance"), "must be positive");
  f.finish();
  return l;
}

bool safe_label(const std::string &s) {
  if (s.empty())
    return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
      return false;
  return true;
}

SamplerConfig parse_algorithm(Fields f, const json &root, std::size_t index,
                              const KLPrior &prior) {
  SamplerConfig c;
  const std::string method = f.get<std::string>("method");
  const auto m = parse_method(method);
  if (!m)
    throw ConfigError(f.key("method"), "unknown method '" + method + "'");
  c.method = *m;
  c.label = f.get<std::string>("name", method);
  if (!safe_label(c.label))
    throw ConfigError(f.key("name"), "use letters, digits, '-', '_' or '.'");
  if (f.has("rho"))
    c.rho = f.get<double>("rho");
  c.step = c.rho ? f.get<double>("step", 1.0) : f.get<double>("step");
  c.leapfrog_max = f.get<int>("leapfrog_max", 1);
  c.block_size = f.get<int>("block", 0);

  auto inherited = [&](const std::string &k) -> long {
    if (f.has(k))
      return f.get<long>(k);
    if (root.contains(k) && root.at(k).is_number_integer())
      return root.at(k).get<long>();
    throw ConfigError(f.key(k), "required (here or at the top level)");
  };
  c.iterations = inherited("iterations");
  c.burn_in = inherited("burn_in");
  if (f.has("seed")) {
    c.seed = f.seed("seed");
  } else if (root.contains("seed") && non_negative_integer(root.at("seed"))) {
    c.seed = root.at("seed").get<std::uint64_t>() + index;
  } else {
    throw ConfigError(f.key("seed"), "required (or a top-level seed)");
  }

  c.adapt.enabled = f.get<bool>("adapt", true);
  c.adapt.target = f.get<double>("target_acceptance", c.adapt.target);
  c.adapt.min_step = f.get<double>("step_min", c.adapt.min_step);
  c.adapt.max_step = f.get<double>("step_max", is_hamiltonian(c.method) ? 1.5 : 4.0);

  const std::string init = f.get<std::string>("init", "zero");
  if (init == "zero")
    c.init = InitKind::zero;
  else if (init == "prior")
    c.init = InitKind::prior;
  else
    throw ConfigError(f.key("init"), "must be zero or prior");
  f.finish();

  try {
    c.validate(prior);
  } catch (const ConfigError &e) {
    const std::string what = e.what();
    throw ConfigError(f.key(e.key()), what.substr(e.key().size() + 2));
  }
  return c;
}

void write_json(const std::filesystem::path &path, const ojson &doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

ojson vector_json(const Eigen::VectorXd &v) {
  return ojson(std::vector<double>(v.data(), v.data() + v.size()));
}

ojson counts_json(const SolveCounts &c) {
  return {{"forward", c.forward},
          {"adjoint", c.adjoint},
          {"tangent", c.tangent},
          {"total", c.total()}};
}

} // namespace

ExperimentConfig parse_config(const json &doc) {
  Fields f(doc, "");
  ExperimentConfig cfg;
  cfg.prior = parse_prior(Fields(f.raw("prior"), "prior"));
  const KLPrior prior = [&] {
    try {
      return make_prior(cfg.prior);
    } catch (const std::invalid_argument &e) {
      throw ConfigError("prior", e.what());
    }
  }();

  Fields model(f.raw("model"), "model");
  const std::string kind = model.get<std::string>("kind");
  model.ignore("kind");
  if (kind == "groundwater") {
    cfg.model = parse_groundwater(std::move(model), cfg.prior);
  } else if (kind == "linear-gaussian") {
    cfg.model = parse_linear(std::move(model));
  } else {
    throw ConfigError("model.kind", "must be groundwater or linear-gaussian");
  }

  f.ignore("iterations");
  f.ignore("burn_in");
  f.ignore("seed");
  f.ignore("manifest");
  const json &algs = f.raw("algorithms");
  if (!algs.is_array() || algs.empty())
    throw ConfigError("algorithms", "must be a non-empty array");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < algs.size(); ++i) {
    const std::string path = "algorithms[" + std::to_string(i) + "]";
    cfg.algorithms.push_back(parse_algorithm(Fields(algs[i], path), doc, i, prior));
    if (!labels.insert(cfg.algorithms.back().label).second)
      throw ConfigError(path + ".name", "duplicate name '" + cfg.algorithms.back().label + "'");
  }
  cfg.baseline = f.get<std::string>("baseline", cfg.algorithms.front().label);
  if (!labels.count(cfg.baseline))
    throw ConfigError("baseline", "names no algorithm");
  cfg.output_dir = f.get<std::string>("output_dir", "out");
  cfg.dump_samples = f.get<bool>("dump_samples", true);
  f.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError(path.string(), "cannot open");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError(path.string(), "parse error at byte " + std::to_string(e.byte) +
                                         ": " + e.what());
  }
  return parse_config(doc);
}

ojson to_json(const ExperimentConfig &config) {
  ojson doc;
  ojson prior;
  prior["kind"] = config.prior.kind;
  if (config.prior.kind == "explicit") {
    prior["eigenvalues"] = config.prior.eigenvalues;
  } else {
    prior["alpha"] = config.prior.hyper.alpha;
    prior["sigma2"] = config.prior.hyper.sigma2;
    prior["s"] = config.prior.hyper.s;
    prior["cap"] = config.prior.cap;
  }
  doc["prior"] = prior;

  if (const auto *g = std::get_if<GroundwaterSpec>(&config.model)) {
    doc["model"] = {{"kind", "groundwater"},
                    {"inference_mesh", g->inference_mesh},
                    {"data_mesh", g->data_mesh},
                    {"noise_variance", g->noise_variance},
                    {"stations",
                     {{"count", g->station_count},
                      {"center", g->station_centre},
                      {"radius", g->station_radius}}},
                    {"data_seed", g->data_seed}};
  } else {
    const auto &l = std::get<LinearGaussianSpec>(config.model);
    doc["model"] = {{"kind", "linear-gaussian"},
                    {"obs", l.obs},
                    {"noise_variance", l.noise_variance},
                    {"design_seed", l.design_seed},
                    {"data_seed", l.data_seed}};
  }

  ojson algs = ojson::array();
  for (const SamplerConfig &c : config.algorithms) {
    ojson a;
    a["method"] = std::string(to_string(c.method));
    a["name"] = c.label;
    a["step"] = c.step;
    if (c.rho)
      a["rho"] = *c.rho;
    a["leapfrog_max"] = c.leapfrog_max;
    a["block"] = c.block_size;
    a["iterations"] = c.iterations;
    a["burn_in"] = c.burn_in;
    a["adapt"] = c.adapt.enabled;
    a["target_acceptance"] = c.adapt.target;
    a["step_min"] = c.adapt.min_step;
    a["step_max"] = c.adapt.max_step;
    a["seed"] = c.seed;
    a["init"] = c.init == InitKind::zero ? "zero" : "prior";
    algs.push_back(a);
  }
  doc["algorithms"] = algs;
  doc["baseline"] = config.baseline;
  doc["output_dir"] = config.output_dir.string();
  doc["dump_samples"] = config.dump_samples;
  return doc;
}

Experiment build_experiment(const ExperimentConfig &config) {
  Experiment exp;
  auto prior = std::make_shared<const KLPrior>(make_prior(config.prior));
  exp.prior = prior;
  ojson prov;

  if (const auto *g = std::get_if<GroundwaterSpec>(&config.model)) {
    const Stations stations =
        circle_stations(g->station_count, g->station_centre, g->station_radius);
    const auto noise = NoiseCovariance::isotropic(g->station_count, g->noise_variance);
    const Eigen::VectorXd empty = Eigen::VectorXd::Zero(g->station_count);
    GroundwaterModel truth_model(prior, Mesh{g->data_mesh, g->data_mesh}, stations,
                                 noise, empty);
    exp.truth = groundwater_truth(*prior);
    exp.clean_data = truth_model.forward_map(exp.truth);
    ChainRng rng(g->data_seed);
    const Eigen::VectorXd y =
        generate_data(truth_model, exp.truth, std::sqrt(g->noise_variance), rng);
    exp.model = std::make_unique<GroundwaterModel>(
        prior, Mesh{g->inference_mesh, g->inference_mesh}, stations, noise, y);

    ojson st = ojson::array();
    for (const auto &s : stations)
      st.push_back(s);
    prov["stations"] = st;
    prov["discretisation"] = "cell-centred finite volume, harmonic face means, "
                             "bilinear station interpolation";
    prov["data_mesh"] = {g->data_mesh, g->data_mesh};
    prov["inference_mesh"] = {g->inference_mesh, g->inference_mesh};
    prov["noise_variance"] = g->noise_variance;
    prov["data_seed"] = g->data_seed;
  } else {
    const auto &l = std::get<LinearGaussianSpec>(config.model);
    ChainRng design_rng(l.design_seed);
    Eigen::MatrixXd design(l.obs, prior->dim());
    for (int i = 0; i < l.obs; ++i)
      for (int j = 0; j < prior->dim(); ++j)
        design(i, j) = design_rng.normal();
    const auto noise = NoiseCovariance::isotropic(l.obs, l.noise_variance);
    auto model = std::make_unique<LinearGaussianModel>(design, noise,
                                                       Eigen::VectorXd::Zero(l.obs));
    ChainRng rng(l.data_seed);
    exp.truth = sample_prior(*prior, rng);
    exp.clean_data = model->forward_map(exp.truth);
    model->set_data(generate_data(*model, exp.truth, std::sqrt(l.noise_variance), rng));
    const auto post = model->posterior(*prior);
    ojson rows = ojson::array();
    for (int i = 0; i < l.obs; ++i)
      rows.push_back(vector_json(design.row(i).transpose()));
    prov["design"] = rows;
    prov["posterior_mean"] = vector_json(post.mean);
    prov["posterior_variance"] = vector_json(post.covariance.diagonal());
    prov["noise_variance"] = l.noise_variance;
    prov["design_seed"] = l.design_seed;
    prov["data_seed"] = l.data_seed;
    exp.model = std::move(model);
  }
  prov["prior_eigenvalues"] = vector_json(prior->eigenvalues());
  prov["truth"] = vector_json(exp.truth);
  prov["clean_data"] = vector_json(exp.clean_data);
  prov["data"] = vector_json(exp.model->data());
  ojson seeds;
  for (const SamplerConfig &c : config.algorithms)
    seeds[c.label] = c.seed;
  prov["chain_seeds"] = seeds;
  exp.provenance = prov;
  return exp;
}

RunResult run_experiment(const ExperimentConfig &config, const RunOptions &options) {
  if (options.jobs < 1)
    throw std::invalid_argument("run: jobs must be at least 1");
  RunResult result;
  result.output_dir = options.output_dir.value_or(config.output_dir);
  std::filesystem::create_directories(result.output_dir);

  Experiment exp = build_experiment(config);
  ojson manifest = to_json(config);
  manifest["output_dir"] = result.output_dir.string();
  manifest["manifest"] = exp.provenance;
  write_json(result.output_dir / "manifest.json", manifest);

  const std::size_t count = config.algorithms.size();
  result.records.resize(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        auto model = exp.model->clone();
        result.records[i] = run_chain(*model, *exp.prior, config.algorithms[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(options.jobs, static_cast<int>(count));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(worker);
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);

  for (const ChainRecord &rec : result.records) {
    const auto base = result.output_dir / rec.label;
    write_trace_csv(base.string() + ".trace.csv", rec);
    if (config.dump_samples)
      write_samples_csv(base.string() + ".samples.csv", rec);
    ojson chain;
    chain["name"] = rec.label;
    chain["seed"] = rec.config.seed;
    chain["kept"] = rec.length();
    chain["final_step"] = rec.final_step;
    chain["solves"] = counts_json(rec.solves);
    chain["leapfrog_total"] = rec.leapfrog_total;
    chain["solver_failures"] = rec.solver_failures;
    chain["timing"] = {{"wall_seconds", rec.wall_seconds}};
    write_json(base.string() + ".chain.json", chain);
  }

  result.summary = summarize(result.records, config.baseline);
  write_summary_csv(result.output_dir / "summary.csv", result.summary);
  write_summary_json(result.output_dir / "summary.json", result.summary);
  return result;
}

std::vector<SummaryRow> summarize_directory(const std::filesystem::path &dir,
                                            std::optional<std::string> baseline) {
  const ExperimentConfig config = load_config(dir / "manifest.json");
  std::vector<ChainRecord> records;
  for (const SamplerConfig &c : config.algorithms) {
    const std::string base = (dir / c.label).string();
    ChainRecord rec;
    rec.label = c.label;
    rec.config = c;
    if (!std::filesystem::exists(base + ".samples.csv"))
      throw std::runtime_error("summarize: " + base +
                               ".samples.csv missing (run with dump_samples)");
    rec.samples = read_samples_csv(base + ".samples.csv");
    const Eigen::MatrixXd trace = read_samples_csv(base + ".trace.csv");
    if (trace.cols() != 2 || trace.rows() != rec.samples.rows())
      throw std::runtime_error("summarize: " + base + ".trace.csv does not match samples");
    for (Eigen::Index i = 0; i < trace.rows(); ++i) {
      rec.misfit.push_back(trace(i, 0));
      rec.accepted.push_back(trace(i, 1) != 0.0 ? 1 : 0);
    }
    std::ifstream in(base + ".chain.json");
    if (!in)
      throw std::runtime_error("summarize: cannot read " + base + ".chain.json");
    const json chain = json::parse(in);
    rec.wall_seconds = chain.at("timing").at("wall_seconds").get<double>();
    rec.solves.forward = chain.at("solves").at("forward").get<long>();
    rec.solves.adjoint = chain.at("solves").at("adjoint").get<long>();
    rec.solves.tangent = chain.at("solves").at("tangent").get<long>();
    records.push_back(std::move(rec));
  }
  auto rows = summarize(records, baseline.value_or(config.baseline));
  write_summary_csv(dir / "summary.csv", rows);
  write_summary_json(dir / "summary.json", rows);
  return rows;
}

} // namespace infmcmc
