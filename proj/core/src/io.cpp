#include "pmmf/io.hpp"

#include <fstream>
#include <sstream>

#include "pmmf/errors.hpp"

namespace pmmf {

namespace {

using nlohmann::json;

Eigen::VectorXd vector_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidArgument(what + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw InvalidArgument(what + " must be a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InvalidArgument(what + " rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return out;
}

EmissionSpec emission_from(const json& j) {
  const std::string kind = j.value("kind", "categorical");
  if (kind == "categorical") return EmissionSpec::categorical(j.at("weights").get<std::vector<double>>());
  if (kind == "gaussian") {
    const Eigen::VectorXd mean = vector_from(j.at("mean"), "gaussian mean");
    Eigen::MatrixXd cov;
    if (j.contains("cov")) {
      cov = matrix_from(j.at("cov"), "gaussian cov");
    } else {
      const double sd = j.value("sd", 1.0);
      cov = Eigen::MatrixXd::Identity(mean.size(), mean.size()) * sd * sd;
    }
    return EmissionSpec::gaussian(mean, cov);
  }
  throw InvalidArgument("unknown emission kind '" + kind + "'");
}

json emission_to(const EmissionSpec& e) {
  switch (e.kind()) {
    case EmissionSpec::Kind::categorical:
      return {{"kind", "categorical"}, {"weights", e.weights()}};
    case EmissionSpec::Kind::gaussian:
      return {{"kind", "gaussian"}, {"mean", to_json(e.mean())}, {"cov", to_json(e.cov())}};
    case EmissionSpec::Kind::custom:
      break;
  }
  throw InvalidArgument("custom emission laws cannot be serialized");
}

Eigen::VectorXd init_from(const json& j, const Eigen::MatrixXd& trans, bool& stationary) {
  stationary = j.contains("init") && j.at("init").is_string() && j.at("init").get<std::string>() == "stationary";
  if (stationary || !j.contains("init")) {
    stationary = true;
    return Eigen::VectorXd::Constant(trans.rows(), 1.0 / static_cast<double>(trans.rows()));
  }
  return vector_from(j.at("init"), "init");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ModelPtr model_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "finite_pmm") {
      const Eigen::MatrixXd trans = matrix_from(j.at("trans"), "trans");
      Eigen::VectorXd init = vector_from(j.at("init"), "init");
      return std::make_shared<FinitePMM>(j.at("n_obs").get<std::size_t>(), j.at("n_states").get<std::size_t>(),
                                         trans, init);
    }
    if (kind == "hmm") {
      const Eigen::MatrixXd trans = matrix_from(j.at("trans"), "trans");
      bool stationary = false;
      const Eigen::VectorXd init = init_from(j, trans, stationary);
      std::vector<EmissionSpec> emissions;
      for (const auto& e : j.at("emissions")) emissions.push_back(emission_from(e));
      auto model = std::make_shared<HiddenMarkovModel>(trans, init, std::move(emissions));
      if (stationary) return model->with_stationary_start();
      return model;
    }
    if (kind == "lmsm") {
      const Eigen::MatrixXd trans = matrix_from(j.at("trans"), "trans");
      bool stationary = false;
      const Eigen::VectorXd init = init_from(j, trans, stationary);
      std::vector<Eigen::MatrixXd> dynamics;
      for (const auto& f : j.at("dynamics")) {
        dynamics.push_back(f.is_array() && !f.empty() && f[0].is_array() ? matrix_from(f, "dynamics")
                                                                            : Eigen::MatrixXd::Constant(1, 1, f.get<double>()));
      }
      std::vector<EmissionSpec> noise;
      for (const auto& e : j.at("noise")) noise.push_back(emission_from(e));
      std::optional<LinearSwitchingModel::InitialObs> init_obs;
      if (j.contains("init_x")) {
        LinearSwitchingModel::InitialObs io;
        io.point = vector_from(j.at("init_x"), "init_x");
        init_obs = io;
      }
      // "stationary" here means the stationary law of Y alone; X_1 still follows init_x.
      const Eigen::VectorXd y_init = stationary ? stationary_vector(trans) : init;
      return std::make_shared<LinearSwitchingModel>(trans, y_init, std::move(dynamics), std::move(noise), init_obs);
    }
    throw InvalidArgument("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed model file: ") + e.what());
  }
}

ModelPtr load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InvalidArgument("cannot parse " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

json model_to_json(const ModelKernel& model) {
  switch (model.kind()) {
    case ModelKind::finite_pmm: {
      const auto& m = dynamic_cast<const FinitePMM&>(model);
      return {{"kind", "finite_pmm"}, {"n_obs", m.n_obs()}, {"n_states", m.n_states()},
              {"trans", to_json(m.trans())}, {"init", to_json(m.init())}};
    }
    case ModelKind::hmm: {
      const auto& m = dynamic_cast<const HiddenMarkovModel&>(model);
      json em = json::array();
      for (const auto& e : m.emissions()) em.push_back(emission_to(e));
      return {{"kind", "hmm"}, {"trans", to_json(m.trans())}, {"init", to_json(m.init())}, {"emissions", em}};
    }
    case ModelKind::lmsm: {
      const auto& m = dynamic_cast<const LinearSwitchingModel&>(model);
      json dyn = json::array();
      for (const auto& f : m.dynamics()) dyn.push_back(to_json(f));
      json noise = json::array();
      for (const auto& e : m.noise()) noise.push_back(emission_to(e));
      json out{{"kind", "lmsm"}, {"trans", to_json(m.trans())}, {"init", to_json(m.init())},
               {"dynamics", dyn}, {"noise", noise}};
      if (m.initial_obs().density) throw InvalidArgument("an initial observation density cannot be serialized");
      out["init_x"] = to_json(m.initial_obs().point);
      return out;
    }
  }
  throw InvalidArgument("unknown model kind");
}

ObsSeq parse_observations(const std::string& text, const ObsSpace& space) {
  std::istringstream in(text);
  std::string line;
  ObsSeq out;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::string field = line;
    if (field.front() == '"') {
      const auto close = field.find('"', 1);
      if (close == std::string::npos) throw InvalidArgument("unterminated quote on line " + std::to_string(line_no));
      field = field.substr(1, close - 1);
    }
    const bool numeric = field.find_first_not_of("0123456789+-.eE, ") == std::string::npos;
    if (!numeric) {
      if (out.empty() && line_no == 1) continue;  // header
      throw InvalidArgument("line " + std::to_string(line_no) + ": not a number");
    }
    try {
      if (space.finite()) {
        std::size_t pos = 0;
        const long v = std::stol(field, &pos);
        if (pos != field.size() || v < 0 || static_cast<std::size_t>(v) >= space.size) {
          throw InvalidArgument("line " + std::to_string(line_no) + ": symbol outside the alphabet");
        }
        out.push_back(ObsPoint::symbol(static_cast<std::size_t>(v)));
      } else {
        std::vector<double> parts;
        std::istringstream fs(field);
        std::string part;
        while (std::getline(fs, part, ',')) parts.push_back(std::stod(trim(part)));
        if (parts.size() != space.size) {
          throw InvalidArgument("line " + std::to_string(line_no) + ": expected " + std::to_string(space.size) +
                                " components");
        }
        out.push_back(ObsPoint::vector(Eigen::Map<Eigen::VectorXd>(parts.data(), static_cast<Eigen::Index>(parts.size()))));
      }
    } catch (const std::logic_error&) {
      throw InvalidArgument("line " + std::to_string(line_no) + ": cannot parse '" + field + "'");
    }
  }
  if (out.empty()) throw InvalidArgument("no observations");
  return out;
}

ObsSeq read_observations(const std::filesystem::path& path, const ObsSpace& space) {
  return parse_observations(read_text(path), space);
}

std::string format_observation(const ObsPoint& x) {
  if (x.is_symbol()) return std::to_string(x.symbol());
  std::ostringstream os;
  os.precision(17);
  os << '"';
  for (Eigen::Index i = 0; i < x.vec().size(); ++i) os << (i > 0 ? "," : "") << x.vec()(i);
  os << '"';
  return os.str();
}

std::string observations_csv(ObsView xs) {
  std::string out = "x\n";
  for (const auto& x : xs) out += format_observation(x) + "\n";
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,x,y\n";
  for (std::size_t t = 0; t < traj.xs.size(); ++t) {
    out += std::to_string(t + 1) + "," + format_observation(traj.xs[t]) + "," + std::to_string(traj.ys[t]) + "\n";
  }
  return out;
}

json y_plus_to_json(const YPlusSet& y) {
  json pairs = json::array();
  for (const auto& [i, j] : y.pairs) pairs.push_back({i, j});
  return {{"pairs", pairs}, {"rows", y.proj1}, {"cols", y.proj2}, {"product", y.is_product()}};
}

json certificate_to_json(const ForgettingCertificate& cert) {
  json out{{"r", cert.r},
           {"y_plus", y_plus_to_json(cert.y_plus)},
           {"n0", cert.n0},
           {"rho", cert.rho},
           {"provenance", provenance_name(cert.provenance)},
           {"assumptions", cert.assumptions},
           {"description", cert.description}};
  if (cert.members) {
    json members = json::array();
    for (const auto& block : *cert.members) {
      json b = json::array();
      for (const auto& x : block) b.push_back(format_observation(x));
      members.push_back(b);
    }
    out["members"] = members;
  }
  return out;
}

json failure_to_json(const BlockFailure& f) {
  json witness = json::array();
  for (const auto& x : f.witness) witness.push_back(format_observation(x));
  return {{"r", f.r},
          {"n_blocks", f.n_blocks},
          {"n_empty", f.n_empty},
          {"n_non_product", f.n_non_product},
          {"n_a2_fail", f.n_a2_fail},
          {"witness", witness},
          {"witness_y_plus", y_plus_to_json(f.witness_y_plus)},
          {"witness_restricted_y_plus", y_plus_to_json(f.witness_restricted_y_plus)},
          {"reason", f.reason}};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

}  // namespace pmmf
