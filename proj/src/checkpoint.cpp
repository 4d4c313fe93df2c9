#include "casgcn/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace casgcn::ad {

namespace {

constexpr const char* kHeader = "casgcn-ckpt-v1";

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("checkpoint: " + what);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) fail("failed to format value");
  return std::string(buf, ptr);
}

void write_checkpoint(std::ostream& out, const std::string& kind, const ParamStore& params) {
  out << kHeader << "\n";
  out << "kind " << kind << "\n";
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& m = params.value(i);
    out << "param " << params.name(i) << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c > 0) out << " ";
        out << format_double(m(r, c));
      }
      out << "\n";
    }
  }
}

void write_checkpoint(const std::string& path, const std::string& kind,
                      const ParamStore& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open for writing: " + path);
  write_checkpoint(out, kind, params);
  if (!out) fail("write failed: " + path);
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    fail("missing or unrecognized header (expected \"" + std::string(kHeader) + "\")");
  }
  Checkpoint ckpt;
  if (!std::getline(in, line)) fail("missing kind line");
  {
    std::istringstream fields(line);
    std::string tag;
    fields >> tag >> ckpt.kind;
    if (tag != "kind" || ckpt.kind.empty()) fail("malformed kind line: " + line);
  }

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tag, name;
    Eigen::Index rows = 0, cols = 0;
    fields >> tag >> name >> rows >> cols;
    if (tag != "param" || name.empty() || fields.fail() || rows < 0 || cols < 0) {
      fail("malformed param record: " + line);
    }
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) fail("truncated values for parameter " + name);
      const char* p = line.data();
      const char* end = line.data() + line.size();
      for (Eigen::Index c = 0; c < cols; ++c) {
        while (p < end && *p == ' ') ++p;
        double v = 0.0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc()) {
          fail("bad value in parameter " + name + " row " + std::to_string(r));
        }
        m(r, c) = v;
        p = next;
      }
    }
    ckpt.params.add(name, std::move(m));
  }
  return ckpt;
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open for reading: " + path);
  return read_checkpoint(in);
}

}  // namespace casgcn::ad
