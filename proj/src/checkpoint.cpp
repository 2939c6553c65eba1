#include "samo/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace samo {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_values(std::ostream& out, const char* name, const Mat& m) {
  out << name;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << format_double(m(r, c));
  out << '\n';
}

void write_values(std::ostream& out, const char* name, const Vec& v) {
  out << name;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v[i]);
  out << '\n';
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty()) return true;
    }
    return false;
  }

  std::string require(const std::string& what) {
    std::string line;
    if (!next(line)) throw ParseError(where() + "unexpected end of file, expected " + what);
    return line;
  }

  std::string where() const { return path_ + ":" + std::to_string(line_no_) + ": "; }

 private:
  std::istream& in_;
  std::string path_;
  int line_no_ = 0;
};

/// Splits "name v v v ..." and parses the tail into `count` doubles.
std::vector<double> parse_values(const std::string& line, const std::string& expected_name,
                                 Eigen::Index count, const std::string& where) {
  std::istringstream iss(line);
  std::string name;
  iss >> name;
  if (name != expected_name)
    throw ParseError(where + "expected tensor '" + expected_name + "', got '" + name + "'");
  std::vector<double> values(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(iss >> values[i]))
      throw ParseError(where + "tensor '" + expected_name + "' needs " + std::to_string(count) +
                       " values");
  }
  std::string extra;
  if (iss >> extra)
    throw ParseError(where + "tensor '" + expected_name + "' has trailing data");
  return values;
}

Mat to_matrix(const std::vector<double>& values, Eigen::Index rows, Eigen::Index cols) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[r * cols + c];
  return m;
}

std::string expect_prefix(const std::string& line, const std::string& prefix,
                          const std::string& where) {
  if (line.rfind(prefix, 0) != 0)
    throw ParseError(where + "expected line starting with '" + prefix + "'");
  return line.substr(prefix.size());
}

}  // namespace

std::string objective_name(Objective objective) {
  switch (objective) {
    case Objective::kSamo:
      return "samo";
    case Objective::kOcSoftmax:
      return "ocs";
    case Objective::kSoftmax:
      return "softmax";
  }
  return "samo";
}

Objective parse_objective(const std::string& name) {
  if (name == "samo") return Objective::kSamo;
  if (name == "ocs" || name == "oc_softmax") return Objective::kOcSoftmax;
  if (name == "softmax") return Objective::kSoftmax;
  throw ConfigError("unknown objective '" + name + "' (expected samo|ocs|softmax)");
}

Objective Checkpoint::objective() const {
  if (attractors) return Objective::kSamo;
  if (center) return Objective::kOcSoftmax;
  if (head) return Objective::kSoftmax;
  throw ConfigError("checkpoint has no scoring block");
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());

  out << "samo-ckpt v1\n";
  out << "dims=";
  const auto dims = checkpoint.encoder.dims();
  for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? "," : "") << dims[i];
  out << '\n';
  out << "activation="
      << (checkpoint.encoder.activation == Activation::kRelu ? "relu" : "tanh") << '\n';
  for (std::size_t l = 0; l < checkpoint.encoder.layer_count(); ++l) {
    write_values(out, ("W" + std::to_string(l)).c_str(), checkpoint.encoder.weights[l]);
    write_values(out, ("b" + std::to_string(l)).c_str(), checkpoint.encoder.biases[l]);
  }

  if (checkpoint.attractors) {
    const auto& set = *checkpoint.attractors;
    out << "attractors n=" << set.size() << " d=" << set.dim() << '\n';
    for (Eigen::Index k = 0; k < set.size(); ++k)
      write_values(out, ("s=" + set.speakers()[k]).c_str(), Vec(set.rows().row(k).transpose()));
  } else if (checkpoint.center) {
    out << "center d=" << checkpoint.center->w.size() << '\n';
    write_values(out, "w", checkpoint.center->w);
  } else if (checkpoint.head) {
    out << "softmax_head d=" << checkpoint.head->W2.cols() << '\n';
    write_values(out, "W2", checkpoint.head->W2);
    write_values(out, "b2", checkpoint.head->b2);
  } else {
    throw ConfigError("save_checkpoint: checkpoint has no scoring block");
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  LineReader reader(in, path.string());

  if (reader.require("header") != "samo-ckpt v1")
    throw ParseError(path.string() + ":1: expected 'samo-ckpt v1' header");

  // reader.require() is hoisted before reader.where() throughout: argument
  // evaluation order is unspecified and where() must see the consumed line.
  const std::string dims_raw = reader.require("dims=");
  const std::string dims_line = expect_prefix(dims_raw, "dims=", reader.where());
  std::vector<Eigen::Index> dims;
  {
    std::istringstream iss(dims_line);
    std::string field;
    while (std::getline(iss, field, ',')) {
      try {
        dims.push_back(static_cast<Eigen::Index>(std::stol(field)));
      } catch (const std::exception&) {
        throw ParseError(reader.where() + "bad dims entry '" + field + "'");
      }
    }
  }
  if (dims.size() < 2) throw ParseError(reader.where() + "dims needs at least two entries");

  const std::string activation_raw = reader.require("activation=");
  const std::string activation = expect_prefix(activation_raw, "activation=", reader.where());
  Checkpoint checkpoint;
  if (activation == "relu")
    checkpoint.encoder.activation = Activation::kRelu;
  else if (activation == "tanh")
    checkpoint.encoder.activation = Activation::kTanh;
  else
    throw ParseError(reader.where() + "unknown activation '" + activation + "'");

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const Eigen::Index rows = dims[l + 1];
    const Eigen::Index cols = dims[l];
    const std::string w_line = reader.require("W" + std::to_string(l));
    const auto w_values =
        parse_values(w_line, "W" + std::to_string(l), rows * cols, reader.where());
    checkpoint.encoder.weights.push_back(to_matrix(w_values, rows, cols));
    const std::string b_line = reader.require("b" + std::to_string(l));
    const auto b_values = parse_values(b_line, "b" + std::to_string(l), rows, reader.where());
    checkpoint.encoder.biases.push_back(
        Eigen::Map<const Vec>(b_values.data(), static_cast<Eigen::Index>(b_values.size())));
  }

  const std::string block = reader.require("scoring block");
  if (block.rfind("attractors ", 0) == 0) {
    Eigen::Index count = 0, dim = 0;
    if (std::sscanf(block.c_str(), "attractors n=%td d=%td", &count, &dim) != 2)
      throw ParseError(reader.where() + "bad attractors header");
    std::vector<std::string> speakers;
    Mat rows(count, dim);
    for (Eigen::Index k = 0; k < count; ++k) {
      const std::string line = reader.require("attractor row");
      std::istringstream iss(line);
      std::string tag;
      iss >> tag;
      if (tag.rfind("s=", 0) != 0)
        throw ParseError(reader.where() + "expected 's=<speaker>' attractor row");
      speakers.push_back(tag.substr(2));
      for (Eigen::Index c = 0; c < dim; ++c)
        if (!(iss >> rows(k, c)))
          throw ParseError(reader.where() + "attractor row needs " + std::to_string(dim) +
                           " values");
    }
    checkpoint.attractors = AttractorSet(std::move(speakers), std::move(rows));
  } else if (block.rfind("center ", 0) == 0) {
    Eigen::Index dim = 0;
    if (std::sscanf(block.c_str(), "center d=%td", &dim) != 1)
      throw ParseError(reader.where() + "bad center header");
    const std::string w_line = reader.require("w");
    const auto values = parse_values(w_line, "w", dim, reader.where());
    checkpoint.center =
        OcCenter{Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()))};
  } else if (block.rfind("softmax_head ", 0) == 0) {
    Eigen::Index dim = 0;
    if (std::sscanf(block.c_str(), "softmax_head d=%td", &dim) != 1)
      throw ParseError(reader.where() + "bad softmax_head header");
    const std::string w_line = reader.require("W2");
    const auto w_values = parse_values(w_line, "W2", 2 * dim, reader.where());
    const std::string b_line = reader.require("b2");
    const auto b_values = parse_values(b_line, "b2", 2, reader.where());
    checkpoint.head = SoftmaxHead{to_matrix(w_values, 2, dim),
                                  Eigen::Map<const Vec>(b_values.data(), 2)};
  } else {
    throw ParseError(reader.where() + "unknown scoring block '" + block + "'");
  }

  std::string extra;
  if (reader.next(extra)) throw ParseError(reader.where() + "trailing content after checkpoint");
  return checkpoint;
}

}  // namespace samo
