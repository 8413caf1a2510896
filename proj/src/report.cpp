#include "specflow/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "specflow/index_theory.hpp"
#include "specflow/wave.hpp"

namespace specflow {

namespace {

using nlohmann::json;

constexpr const char* kSchema = "specflow-report/v1";

std::string format_double(double v) {
  if (std::isnan(v)) return "null";
  if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void dump_value(const json& j, std::string& out, int depth) {
  const std::string pad(2 * depth, ' ');
  const std::string pad_in(2 * (depth + 1), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.cbegin(); it != j.cend(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + json(it.key()).dump() + ": ";
        dump_value(it.value(), out, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        dump_value(item, out, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

json spec_to_json(const TruncationSpec& spec) {
  return json{{"p", spec.p}, {"q", spec.q}, {"J", spec.J},
              {"K", spec.K}, {"Nx", spec.Nx}, {"Nt", spec.Nt}};
}

TruncationSpec spec_from_json(const json& j) {
  TruncationSpec spec;
  spec.p = j.at("p").get<int>();
  spec.q = j.at("q").get<int>();
  spec.J = j.at("J").get<int>();
  spec.K = j.at("K").get<int>();
  spec.Nx = j.at("Nx").get<int>();
  spec.Nt = j.at("Nt").get<int>();
  spec.validate();
  return spec;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.empty()) {
    throw ValidationError(std::string(name) + " must be a non-empty array of rows");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j.at(r).size()) != cols) {
      throw ValidationError(std::string(name) + " rows have uneven lengths");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json operator_to_json(const TruncatedOperator& op) {
  json j;
  j["spec"] = op.spec ? spec_to_json(*op.spec) : json(nullptr);
  json rows = json::array();
  for (int r = 0; r < op.dim(); ++r) {
    json row = json::array();
    for (int c = 0; c < op.dim(); ++c) row.push_back(op.matrix(r, c));
    rows.push_back(row);
  }
  j["matrix"] = rows;  // row-major
  j["eigenvalues"] = vector_to_json(symmetric_eigenvalues(op.matrix));
  return j;
}

json index_pair_to_json(const IndexPair& pair) {
  json j;
  j["index"] = pair.index;
  j["nullity"] = pair.nullity;
  j["kernel_tol"] = pair.kernel_tol;
  j["stable"] = pair.stable;
  return j;
}

json hypothesis_to_json(const HypothesisReport& r) {
  json j;
  j["condition"] = r.condition;
  j["holds"] = r.holds;
  j["seed"] = r.seed;
  json ev;
  for (const auto& [key, val] : r.evidence) ev[key] = val;
  j["evidence"] = ev;
  j["notes"] = r.notes;
  return j;
}

// Builds the wave problem described by config["problem"].
struct ProblemConfig {
  TruncationSpec spec;
  Nonlinearity nl;
  std::optional<double> threshold;
};

ProblemConfig parse_problem(const json& cfg) {
  const json& p = cfg.at("problem");
  ProblemConfig out;
  out.spec = spec_from_json(p);
  const json& nlj = p.at("nonlinearity");
  const std::string name = nlj.at("name").get<std::string>();
  std::map<std::string, double> params;
  if (nlj.contains("params")) {
    for (auto it = nlj.at("params").cbegin(); it != nlj.at("params").cend(); ++it) {
      params[it.key()] = it.value().get<double>();
    }
  }
  if (name == "ex_thm43" && params.count("k") && !params.count("lambda_k")) {
    params["lambda_k"] =
        truncated_lambda_k(out.spec, static_cast<int>(params.at("k")));
  }
  if ((name == "linear_forced") && !params.count("p")) {
    params["p"] = out.spec.p;
    params["q"] = out.spec.q;
  }
  out.nl = example_nonlinearity(name, params);
  if (p.contains("threshold")) out.threshold = p.at("threshold").get<double>();
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

void write_solution_csv(const std::filesystem::path& path,
                        const FourierBasis& basis, const Eigen::VectorXd& coeffs) {
  Eigen::MatrixXd grid = basis.to_grid(coeffs);
  std::string csv = "x,t,u\n";
  for (int m = 0; m < basis.spec().Nx; ++m) {
    for (int n = 0; n < basis.spec().Nt; ++n) {
      csv += format_double(basis.x_node(m)) + "," +
             format_double(basis.t_node(n)) + "," +
             format_double(grid(m, n)) + "\n";
    }
  }
  write_file(path, csv);
}

json run_spectrum(const json& cfg) {
  ProblemConfig pc = parse_problem(cfg);
  json out;
  out["truncation"] = spec_to_json(pc.spec);
  out["shift_b"] = pc.nl.b;

  TruncatedOperator box = wave_operator(pc.spec);
  const auto modes = mode_table(pc.spec);
  json table = json::array();
  for (std::size_t i = 0; i < modes.size(); ++i) {
    table.push_back(json{{"j", modes[i].j},
                         {"k", modes[i].k},
                         {"phase", modes[i].phase == Phase::cos ? "cos" : "sin"},
                         {"lambda", box.matrix(i, i)}});
  }
  out["modes"] = table;

  TruncatedOperator A = box.shifted(pc.nl.b);
  double ga = -std::abs(pc.nl.b), gb = std::abs(pc.nl.b);
  if (cfg.contains("gap")) {
    ga = cfg.at("gap").at("a").get<double>();
    gb = cfg.at("gap").at("b").get<double>();
  }
  GapReport gap = gap_report(A, ga, gb);
  out["gap_report"] = json{{"a", gap.a},
                           {"b", gap.b},
                           {"eigenvalues_inside", gap.eigenvalues_inside},
                           {"min_distance_to_endpoints",
                            gap.min_distance_to_endpoints}};
  if (cfg.value("emit_operator", false)) {
    out["operator"] = operator_to_json(A);
  }
  return out;
}

json run_index(const json& cfg) {
  json out;
  if (cfg.contains("matrix_a")) {
    TruncatedOperator A =
        TruncatedOperator::from_matrix(matrix_from_json(cfg.at("matrix_a"), "matrix_a"));
    TruncatedOperator B =
        TruncatedOperator::from_matrix(matrix_from_json(cfg.at("matrix_b"), "matrix_b"));
    out["dimension"] = A.dim();
    out["index_pair"] = index_pair_to_json(relative_morse_index(A, B));
    return out;
  }
  ProblemConfig pc = parse_problem(cfg);
  out["truncation"] = spec_to_json(pc.spec);
  json pairs;
  auto add = [&](const char* name, const FieldFn& g) {
    if (g) pairs[name] = index_pair_to_json(field_index_pair(pc.spec, pc.nl.b, g));
  };
  add("g1", pc.nl.g1);
  add("g2", pc.nl.g2);
  add("g_inf", pc.nl.g_inf);
  add("g3", pc.nl.g3);
  add("b0", pc.nl.b0);
  if (pairs.empty()) {
    throw ValidationError("nonlinearity supplies no comparison fields to index");
  }
  out["pairs"] = pairs;
  return out;
}

json flow_to_json(const FlowResult& flow) {
  json crossings = json::array();
  for (const Crossing& c : flow.crossings) {
    crossings.push_back(json{{"t", c.t}, {"branch", c.branch}, {"sign", c.sign}});
  }
  return json{{"flow", flow.flow},
              {"crossings", crossings},
              {"partition", flow.partition}};
}

json run_flow(const json& cfg) {
  const double t0 = cfg.value("t0", 0.0);
  const double t1 = cfg.value("t1", 1.0);
  const int steps = cfg.value("steps", 16);
  json out;
  if (cfg.contains("matrix_a")) {
    TruncatedOperator A =
        TruncatedOperator::from_matrix(matrix_from_json(cfg.at("matrix_a"), "matrix_a"));
    TruncatedOperator B =
        TruncatedOperator::from_matrix(matrix_from_json(cfg.at("matrix_b"), "matrix_b"));
    out["dimension"] = A.dim();
    out["result"] = flow_to_json(spectral_flow(A, B, t0, t1, steps));
    return out;
  }
  ProblemConfig pc = parse_problem(cfg);
  const std::string field = cfg.value("field", "g2");
  FieldFn g;
  if (field == "g1") g = pc.nl.g1;
  else if (field == "g2") g = pc.nl.g2;
  else if (field == "g_inf") g = pc.nl.g_inf;
  else if (field == "g3") g = pc.nl.g3;
  else if (field == "b0") g = pc.nl.b0;
  if (!g) throw ValidationError("flow: field " + field + " not supplied");
  FourierBasis basis(pc.spec);
  Eigen::MatrixXd grid(pc.spec.Nx, pc.spec.Nt);
  for (int m = 0; m < pc.spec.Nx; ++m)
    for (int n = 0; n < pc.spec.Nt; ++n)
      grid(m, n) = g(basis.x_node(m), basis.t_node(n));
  TruncatedOperator A = wave_operator(pc.spec).shifted(pc.nl.b);
  TruncatedOperator B = multiplication_operator(basis, grid);
  out["truncation"] = spec_to_json(pc.spec);
  out["field"] = field;
  out["result"] = flow_to_json(spectral_flow(A, B, t0, t1, steps));
  return out;
}

json run_check(const json& cfg, std::uint64_t seed) {
  ProblemConfig pc = parse_problem(cfg);
  WaveProblem problem = WaveProblem::create(pc.spec, pc.nl, pc.threshold);
  std::set<std::string> which;
  if (cfg.contains("which")) {
    for (const auto& tag : cfg.at("which")) which.insert(tag.get<std::string>());
  } else {
    if (problem.nl.g_of_u && problem.nl.g1 && problem.nl.g2) which.insert("f2");
    if (problem.nl.g_inf && problem.nl.f2pm_sign != 0) which.insert("f2pm");
    if (problem.nl.g3 && problem.nl.f3_sign > 0) which.insert("f3plus");
    if (problem.nl.g3 && problem.nl.f3_sign < 0) which.insert("f3minus");
    if (problem.nl.b0 && problem.nl.g3) which.insert("f4plus");
    which.insert("f1");
  }
  json out;
  out["truncation"] = spec_to_json(pc.spec);
  out["threshold"] = problem.threshold();
  json reports = json::array();
  for (const HypothesisReport& r : check_hypotheses(problem, which, seed)) {
    reports.push_back(hypothesis_to_json(r));
  }
  out["reports"] = reports;
  return out;
}

json run_solve(const json& cfg, std::uint64_t seed, bool force,
               const std::filesystem::path& outdir) {
  ProblemConfig pc = parse_problem(cfg);
  WaveProblem problem = WaveProblem::create(pc.spec, pc.nl, pc.threshold);

  const std::string method_name = cfg.value("method", "reduce_direct");
  SolveMethod method;
  if (method_name == "reduce_direct") method = SolveMethod::reduce_direct;
  else if (method_name == "homotopy") method = SolveMethod::homotopy;
  else if (method_name == "regularized") method = SolveMethod::regularized;
  else throw ValidationError("unknown method: " + method_name);

  WaveSolveOptions opts;
  opts.seed = seed;
  opts.force = force || cfg.value("force", false);
  opts.budget = cfg.value("budget", 40000L);
  const std::string strategy = cfg.value(
      "strategy", problem.nl.f3_sign != 0 ? "maximize" : "multistart_newton");
  opts.strategy = (strategy == "maximize") ? SearchStrategy::maximize
                                           : SearchStrategy::multistart_newton;
  if (cfg.contains("eps_sequence")) {
    opts.eps_sequence.clear();
    for (const auto& e : cfg.at("eps_sequence"))
      opts.eps_sequence.push_back(e.get<double>());
  }
  opts.lambda_steps = cfg.value("lambda_steps", 21);

  WaveSolveResult res = solve_wave(problem, method, opts);

  json out;
  out["truncation"] = spec_to_json(pc.spec);
  out["threshold"] = problem.threshold();
  out["method"] = method_name;
  out["strategy"] = strategy;
  out["diagnostics"] = res.diagnostics;

  json sols = json::array();
  for (std::size_t i = 0; i < res.solutions.size(); ++i) {
    const WaveSolution& s = res.solutions[i];
    json sj;
    sj["value"] = s.cp.value;
    sj["grad_norm"] = s.cp.grad_norm;
    sj["residual"] = s.residual;
    sj["residual_fine"] = s.residual_fine;
    sj["norm"] = s.cp.z.norm();
    sj["hessian_signature"] = json::array({s.cp.hessian_signature.negatives,
                                           s.cp.hessian_signature.zeros,
                                           s.cp.hessian_signature.positives});
    sj["x"] = vector_to_json(s.cp.x);
    sj["coeffs"] = vector_to_json(s.cp.z);
    sols.push_back(sj);
    if (cfg.value("emit_grids", true)) {
      write_solution_csv(outdir / ("solution_" + std::to_string(i) + ".csv"),
                         *problem.basis, s.cp.z);
    }
  }
  out["solutions"] = sols;

  json hyp = json::array();
  for (const HypothesisReport& r : res.hypothesis_reports)
    hyp.push_back(hypothesis_to_json(r));
  out["hypothesis_reports"] = hyp;

  if (!res.homotopy_steps.empty()) {
    json steps = json::array();
    for (const HomotopyStep& s : res.homotopy_steps) {
      steps.push_back(json{{"lambda", s.lambda},
                           {"norm", s.z.norm()},
                           {"grad_norm", s.grad_norm},
                           {"residual", s.residual}});
    }
    out["homotopy_path"] = steps;
  }
  if (!res.regularization_steps.empty()) {
    json steps = json::array();
    for (const RegularizationStep& s : res.regularization_steps) {
      steps.push_back(json{{"eps", s.eps},
                           {"norm", s.z.norm()},
                           {"kernel_norm", s.kernel_norm},
                           {"complement_norm", s.complement_norm},
                           {"residual", s.residual}});
    }
    out["regularization_path"] = steps;
    out["regularization_distances"] = res.regularization_distances;
  }
  return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(std::string_view config_text) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(config_text)));
  return buf;
}

std::string dump_report(const nlohmann::json& report) {
  std::string out;
  dump_value(report, out, 0);
  out += "\n";
  return out;
}

int run_cli(const std::string& config_text, const std::string& output_dir,
            std::optional<std::uint64_t> seed_override, bool force,
            std::ostream& err_stream) {
  json cfg;
  try {
    cfg = json::parse(config_text);
  } catch (const json::exception& e) {
    err_stream << "config parse error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    const std::string command = cfg.at("command").get<std::string>();
    const std::uint64_t seed =
        seed_override ? *seed_override : cfg.value("seed", 1ull);

    std::filesystem::path outdir(output_dir);
    std::filesystem::create_directories(outdir);

    json report;
    if (command == "spectrum") {
      report = run_spectrum(cfg);
    } else if (command == "index") {
      report = run_index(cfg);
    } else if (command == "flow") {
      report = run_flow(cfg);
    } else if (command == "check") {
      report = run_check(cfg, seed);
    } else if (command == "solve") {
      report = run_solve(cfg, seed, force, outdir);
    } else {
      throw ValidationError("unknown command: " + command);
    }

    report["schema"] = kSchema;
    report["command"] = command;
    report["seed"] = seed;
    report["config_hash"] = config_hash(config_text);
    write_file(outdir / "report.json", dump_report(report));
    return kExitOk;
  } catch (const HypothesisRefusalError& e) {
    err_stream << "hypothesis refusal: " << e.what() << "\n";
    return kExitHypothesisRefusal;
  } catch (const ValidationError& e) {
    err_stream << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const json::exception& e) {
    err_stream << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const Error& e) {
    err_stream << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
}

}  // namespace specflow
