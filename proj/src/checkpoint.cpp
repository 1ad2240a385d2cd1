#include "raildelay/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace raildelay {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string expect_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) {
    throw std::runtime_error(std::string("checkpoint: truncated file, expected ") + what);
  }
  return tok;
}

double expect_double(std::istream& in, const char* what) {
  const std::string tok = expect_token(in, what);
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("checkpoint: bad number for ") + what + ": " + tok);
  }
}

long long expect_int(std::istream& in, const char* what) {
  const std::string tok = expect_token(in, what);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("checkpoint: bad integer for ") + what + ": " + tok);
  }
}

std::uint64_t expect_uint(std::istream& in, const char* what) {
  const std::string tok = expect_token(in, what);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("checkpoint: bad integer for ") + what + ": " + tok);
  }
}

void expect_keyword(std::istream& in, const std::string& keyword) {
  const std::string tok = expect_token(in, keyword.c_str());
  if (tok != keyword) {
    throw std::runtime_error("checkpoint: expected '" + keyword + "', found '" + tok + "'");
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  out << "raildelay-checkpoint\n";
  out << "format_version " << kCheckpointFormatVersion << "\n";
  out << "layout_version " << ckpt.layout_version << "\n";
  out << "method " << ckpt.method << "\n";
  out << "seed " << ckpt.seed << "\n";
  out << "config_hash " << ckpt.config_hash << "\n";
  out << "head " << (ckpt.policy.head() == Head::Softmax3 ? "softmax3" : "linear") << "\n";
  out << "layer_dims " << ckpt.policy.layer_dims().size();
  for (int d : ckpt.policy.layer_dims()) out << " " << d;
  out << "\n";
  out << "norm_fitted " << (ckpt.stats.fitted ? 1 : 0) << "\n";
  out << "norm_count_min";
  for (double v : ckpt.stats.count_min) out << " " << fmt_double(v);
  out << "\nnorm_count_max";
  for (double v : ckpt.stats.count_max) out << " " << fmt_double(v);
  out << "\n";
  for (std::size_t l = 0; l < ckpt.policy.n_layers(); ++l) {
    const auto& w = ckpt.policy.weights()[l];
    out << "weights " << l << " " << w.rows() << " " << w.cols() << "\n";
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        out << (c ? " " : "") << fmt_double(w(r, c));
      }
      out << "\n";
    }
    const auto& b = ckpt.policy.biases()[l];
    out << "biases " << l << " " << b.size() << "\n";
    for (Eigen::Index i = 0; i < b.size(); ++i) out << (i ? " " : "") << fmt_double(b(i));
    out << "\n";
  }
  out << "end\n";
}

void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  save_checkpoint(ckpt, out);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(std::istream& in, int expected_layout) {
  expect_keyword(in, "raildelay-checkpoint");
  expect_keyword(in, "format_version");
  const long long format = expect_int(in, "format_version");
  if (format != kCheckpointFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported format_version " + std::to_string(format));
  }
  expect_keyword(in, "layout_version");
  const long long layout = expect_int(in, "layout_version");
  if (layout != expected_layout) {
    throw std::runtime_error("checkpoint: layout_version " + std::to_string(layout) +
                             " does not match encoder layout " + std::to_string(expected_layout));
  }

  Checkpoint ckpt;
  ckpt.layout_version = static_cast<int>(layout);
  expect_keyword(in, "method");
  ckpt.method = expect_token(in, "method value");
  expect_keyword(in, "seed");
  ckpt.seed = expect_uint(in, "seed");
  expect_keyword(in, "config_hash");
  ckpt.config_hash = expect_uint(in, "config_hash");

  expect_keyword(in, "head");
  const std::string head_name = expect_token(in, "head kind");
  Head head;
  if (head_name == "softmax3") {
    head = Head::Softmax3;
  } else if (head_name == "linear") {
    head = Head::LinearK;
  } else {
    throw std::runtime_error("checkpoint: unknown head kind: " + head_name);
  }

  expect_keyword(in, "layer_dims");
  const long long n_dims = expect_int(in, "layer_dims count");
  if (n_dims < 2 || n_dims > 64) throw std::runtime_error("checkpoint: bad layer_dims count");
  std::vector<int> dims(static_cast<std::size_t>(n_dims));
  for (auto& d : dims) {
    d = static_cast<int>(expect_int(in, "layer dim"));
    if (d <= 0) throw std::runtime_error("checkpoint: non-positive layer dim");
  }

  expect_keyword(in, "norm_fitted");
  ckpt.stats.fitted = expect_int(in, "norm_fitted") != 0;
  expect_keyword(in, "norm_count_min");
  for (auto& v : ckpt.stats.count_min) v = expect_double(in, "norm_count_min");
  expect_keyword(in, "norm_count_max");
  for (auto& v : ckpt.stats.count_max) v = expect_double(in, "norm_count_max");

  ckpt.policy = MlpPolicy(dims, head, 0);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    expect_keyword(in, "weights");
    if (expect_int(in, "weights layer") != static_cast<long long>(l)) {
      throw std::runtime_error("checkpoint: weights out of order");
    }
    const long long rows = expect_int(in, "weight rows");
    const long long cols = expect_int(in, "weight cols");
    if (rows != dims[l + 1] || cols != dims[l]) {
      throw std::runtime_error("checkpoint: weight dims mismatch declared layout");
    }
    auto& w = ckpt.policy.weights()[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = expect_double(in, "weight value");
    }
    expect_keyword(in, "biases");
    if (expect_int(in, "biases layer") != static_cast<long long>(l)) {
      throw std::runtime_error("checkpoint: biases out of order");
    }
    if (expect_int(in, "bias size") != dims[l + 1]) {
      throw std::runtime_error("checkpoint: bias dims mismatch declared layout");
    }
    auto& b = ckpt.policy.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = expect_double(in, "bias value");
  }
  expect_keyword(in, "end");
  ckpt.policy.reset_optimizer();
  return ckpt;
}

Checkpoint load_checkpoint_file(const std::string& path, int expected_layout) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_checkpoint(in, expected_layout);
}

}  // namespace raildelay
