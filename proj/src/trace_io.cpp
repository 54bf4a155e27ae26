#include "hasgld/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hasgld {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open for reading: " + path.string());
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    const double back = std::strtod(buf, nullptr);
    if (back == v || (std::isnan(back) && std::isnan(v))) return buf;
  }
  return buf;
}

double parse_double(const std::string& s) {
  require(!s.empty(), "parse_double: empty field");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(end == s.c_str() + s.size(), "parse_double: trailing characters in '" + s + "'");
  return v;
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  const Eigen::Index d = trace.samples.empty() ? 0 : trace.samples.front().size();
  out << "step";
  for (Eigen::Index j = 0; j < d; ++j) out << ",p" << j;
  out << "\n";
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    out << trace.sample_steps[i];
    const Eigen::VectorXd& x = trace.samples[i];
    for (Eigen::Index j = 0; j < x.size(); ++j) out << ',' << format_double(x(j));
    out << "\n";
  }
  require(out.good(), "failed writing " + path.string());
}

LoadedTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty trace file: " + path.string());
  LoadedTrace out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    require(fields.size() >= 2, "malformed trace row in " + path.string());
    out.sample_steps.push_back(static_cast<std::int64_t>(std::stoll(fields[0])));
    Eigen::VectorXd x(static_cast<Eigen::Index>(fields.size() - 1));
    for (std::size_t j = 1; j < fields.size(); ++j)
      x(static_cast<Eigen::Index>(j - 1)) = parse_double(fields[j]);
    out.samples.push_back(std::move(x));
  }
  return out;
}

void write_regression_dataset(const RegressionDataset& data, const std::filesystem::path& csv_path,
                              const std::filesystem::path& meta_path) {
  std::ofstream out = open_out(csv_path);
  const Eigen::Index p = data.X.cols();
  out << "split";
  for (Eigen::Index j = 0; j < p; ++j) out << ",x" << j;
  out << ",y\n";
  const auto write_rows = [&](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const char* split) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      out << split;
      for (Eigen::Index j = 0; j < p; ++j) out << ',' << format_double(X(i, j));
      out << ',' << format_double(y(i)) << "\n";
    }
  };
  write_rows(data.X, data.y, "train");
  write_rows(data.X_test, data.y_test, "test");
  require(out.good(), "failed writing " + csv_path.string());

  nlohmann::json meta;
  meta["seed"] = data.seed;
  meta["noise_var"] = data.noise_var;
  meta["n_train"] = data.X.rows();
  meta["n_test"] = data.X_test.rows();
  meta["p"] = p;
  meta["beta_true"] = std::vector<double>(data.beta_true.data(),
                                          data.beta_true.data() + data.beta_true.size());
  std::ofstream mout = open_out(meta_path);
  mout << meta.dump(2) << "\n";
  require(mout.good(), "failed writing " + meta_path.string());
}

RegressionDataset read_regression_dataset(const std::filesystem::path& csv_path,
                                          const std::filesystem::path& meta_path) {
  nlohmann::json meta;
  {
    std::ifstream min = open_in(meta_path);
    min >> meta;
  }
  RegressionDataset data;
  data.seed = meta.at("seed").get<std::uint64_t>();
  data.noise_var = meta.at("noise_var").get<double>();
  const auto n = meta.at("n_train").get<Eigen::Index>();
  const auto n_test = meta.at("n_test").get<Eigen::Index>();
  const auto p = meta.at("p").get<Eigen::Index>();
  const auto beta = meta.at("beta_true").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(beta.size()) == p, "dataset metadata shape mismatch");
  data.beta_true = Eigen::Map<const Eigen::VectorXd>(beta.data(), p);

  std::ifstream in = open_in(csv_path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty dataset file: " + csv_path.string());
  data.X.resize(n, p);
  data.y.resize(n);
  data.X_test.resize(n_test, p);
  data.y_test.resize(n_test);
  Eigen::Index seen_train = 0;
  Eigen::Index seen_test = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    require(static_cast<Eigen::Index>(fields.size()) == p + 2,
            "malformed dataset row in " + csv_path.string());
    const bool is_train = fields[0] == "train";
    require(is_train || fields[0] == "test", "unknown split label: " + fields[0]);
    Eigen::Index& row = is_train ? seen_train : seen_test;
    Eigen::MatrixXd& X = is_train ? data.X : data.X_test;
    Eigen::VectorXd& y = is_train ? data.y : data.y_test;
    require(row < X.rows(), "too many rows in " + csv_path.string());
    for (Eigen::Index j = 0; j < p; ++j)
      X(row, j) = parse_double(fields[static_cast<std::size_t>(j + 1)]);
    y(row) = parse_double(fields.back());
    ++row;
  }
  require(seen_train == n && seen_test == n_test, "dataset row count mismatch");
  return data;
}

}  // namespace hasgld
