#include "vinestep/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vinestep::io {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return is;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("malformed number '" + s + "'");
  return v;
}

std::string chomp(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

}  // namespace

void write_matrix_csv(const std::string& path, const SampleMatrix& m) {
  auto os = open_out(path);
  std::string line;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      line += format_double(m(i, j));
    }
    line += '\n';
    os << line;
  }
}

SampleMatrix read_matrix_csv(const std::string& path) {
  auto is = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    line = chomp(line);
    if (line.empty()) continue;
    std::vector<double> r;
    for (const auto& f : split(line, ',')) r.push_back(parse_double(f));
    if (!rows.empty() && r.size() != rows.front().size())
      throw std::invalid_argument("ragged CSV '" + path + "' at row " + std::to_string(rows.size() + 1));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::invalid_argument("empty CSV '" + path + "'");
  SampleMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

json structure_to_json(const RVineStructure& s) {
  json trees = json::array();
  for (const auto& tree : s.trees()) {
    json edges = json::array();
    for (const Edge& e : tree) {
      json D = json::array();
      for (int x : e.D) D.push_back(x + 1);
      edges.push_back({{"a", e.a + 1}, {"b", e.b + 1}, {"D", D}});
    }
    trees.push_back(edges);
  }
  return {{"d", s.d()}, {"trunc", s.trunc()}, {"trees", trees}};
}

RVineStructure structure_from_json(const json& j) {
  const int d = j.at("d").get<int>();
  const int trunc = j.value("trunc", d - 1);
  std::vector<std::vector<Edge>> trees;
  for (const auto& jt : j.at("trees")) {
    std::vector<Edge> edges;
    for (const auto& je : jt) {
      Edge e;
      e.a = je.at("a").get<int>() - 1;
      e.b = je.at("b").get<int>() - 1;
      for (const auto& x : je.value("D", json::array())) e.D.push_back(x.get<int>() - 1);
      edges.push_back(std::move(e));
    }
    trees.push_back(std::move(edges));
  }
  RVineStructure s = RVineStructure::from_edges(d, trunc, std::move(trees));
  if (auto v = s.validate())
    throw std::invalid_argument("invalid structure (tree " + std::to_string(v->tree) + ", edge " +
                                std::to_string(v->edge) + "): " + v->message);
  return s;
}

json model_to_json(const VineModel& m) {
  json fams = json::array();
  for (Family f : m.families()) fams.push_back(std::string(family_name(f)));
  return {{"structure", structure_to_json(m.structure())}, {"families", fams}, {"theta", m.theta()}};
}

VineModel model_from_json(const json& j) {
  RVineStructure s = structure_from_json(j.at("structure"));
  std::vector<Family> fams;
  for (const auto& f : j.at("families")) fams.push_back(parse_family(f.get<std::string>()));
  const auto theta = j.at("theta").get<std::vector<double>>();
  return VineModel::from_theta(std::move(s), fams, theta);
}

json fit_to_json(const FitResult& fit) {
  json out = model_to_json(fit.model);
  out["margins"] = std::string(margins_name(fit.margins));
  out["nonconverged"] = fit.nonconverged();
  json edges = json::array();
  const auto& s = fit.model.structure();
  for (int e = 0; e < s.edge_count(); ++e) {
    const int t = s.tree_of_edge(e);
    const Edge& edge = s.edge(t, e - s.edge_offset(t));
    const PairCopula& c = fit.model.copula(e);
    const EdgeDiagnostics& dg = fit.diagnostics.at(e);
    edges.push_back({{"edge", edge.label()},
                     {"tree", t},
                     {"family", std::string(family_name(c.family()))},
                     {"params", std::vector<double>(c.params().begin(), c.params().end())},
                     {"iterations", dg.iterations},
                     {"converged", dg.converged},
                     {"at_boundary", dg.at_boundary},
                     {"gradient", dg.gradient}});
  }
  out["edges"] = edges;
  return out;
}

void write_fit_csv(const std::string& path, const FitResult& fit) {
  auto os = open_out(path);
  os << "edge,family,params,converged\n";
  const auto& s = fit.model.structure();
  for (int e = 0; e < s.edge_count(); ++e) {
    const int t = s.tree_of_edge(e);
    const PairCopula& c = fit.model.copula(e);
    std::string params;
    for (int r = 0; r < c.arity(); ++r) params += (r ? ";" : "") + format_double(c.param(r));
    os << '"' << s.edge(t, e - s.edge_offset(t)).label() << "\"," << family_name(c.family()) << ',' << params
       << ',' << (fit.diagnostics.at(e).converged ? 1 : 0) << '\n';
  }
}

namespace {

void write_dense_csv(const std::string& path, const Eigen::MatrixXd& m) {
  auto os = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << '\n';
  }
}

}  // namespace

void write_empirical_ij(const std::string& prefix, const EmpiricalIJ& ij) {
  write_dense_csv(prefix + "_I.csv", ij.I_hat);
  write_dense_csv(prefix + "_J.csv", ij.J_hat);
  write_json(prefix + ".json", {{"N", ij.N}, {"seed", ij.seed}, {"theta", ij.theta}});
}

const char* const kStudyHeader =
    "study_id,structure,family,theta_model,margins_mode,trunc,d,n,rep,seed,maxnorm_stat,sum_stat,nonconverged,"
    "wall_ms";
const char* const kValidateHeader = "d,p,theta_model,alpha_rule,eps,K,N,seed,a3_hat,mn2_hat,dn_hat";
const char* const kRegimeHeader = "regime,d,n_target,mean_maxnorm_interp";

std::string study_row_csv(const StudyRow& r) {
  std::ostringstream os;
  os << r.study_id << ',' << structure_name(r.structure) << ',' << family_name(r.family) << ',' << r.theta_model
     << ',' << margins_name(r.margins) << ',' << r.trunc << ',' << r.d << ',' << r.n << ',' << r.rep << ','
     << r.seed << ',' << format_double(r.maxnorm_stat) << ',' << format_double(r.sum_stat) << ','
     << r.nonconverged << ',' << format_double(r.wall_ms);
  return os.str();
}

void write_study_csv(std::ostream& os, const std::vector<StudyRow>& rows) {
  os << kStudyHeader << '\n';
  for (const auto& r : rows) os << study_row_csv(r) << '\n';
}

std::vector<StudyRow> read_study_csv(const std::string& path) {
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("empty study CSV '" + path + "'");
  const auto header = split(chomp(line), ',');
  const auto expected = split(kStudyHeader, ',');
  if (header != expected) throw std::invalid_argument("'" + path + "' does not have the study CSV header");
  std::vector<StudyRow> rows;
  while (std::getline(is, line)) {
    line = chomp(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != expected.size()) throw std::invalid_argument("malformed study row in '" + path + "'");
    StudyRow r;
    r.study_id = f[0];
    r.structure = parse_structure(f[1]);
    r.family = parse_family(f[2]);
    r.theta_model = f[3];
    r.margins = parse_margins(f[4]);
    r.trunc = std::stoi(f[5]);
    r.d = std::stoi(f[6]);
    r.n = std::stoi(f[7]);
    r.rep = std::stoi(f[8]);
    r.seed = std::stoull(f[9]);
    r.maxnorm_stat = parse_double(f[10]);
    r.sum_stat = parse_double(f[11]);
    r.nonconverged = std::stoi(f[12]);
    r.wall_ms = parse_double(f[13]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_json(const std::string& path, const json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  auto is = open_in(path);
  return json::parse(is);
}

}  // namespace vinestep::io
