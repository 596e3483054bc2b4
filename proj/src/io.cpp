#include "dgzsl/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "dgzsl/error.hpp"

namespace dgzsl {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw DataError(std::string("truncated file while reading ") + what);
  }
  return v;
}

void read_magic(std::istream& in, const char* expected, const char* what) {
  char magic[8];
  if (!in.read(magic, 8)) throw DataError(std::string("empty or truncated ") + what);
  if (std::memcmp(magic, expected, 8) != 0) {
    throw DataError(std::string("bad magic for ") + what + ", expected " + expected);
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

void write_matrix(std::ostream& out, const Matrix& m) {
  out.write(kMatrixMagic, 8);
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  std::vector<float> buffer(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) buffer[i] = static_cast<float>(m.data()[i]);
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(float)));
}

Matrix read_matrix(std::istream& in) {
  read_magic(in, kMatrixMagic, "matrix block");
  const std::uint32_t rows = read_u32(in, "matrix rows");
  const std::uint32_t cols = read_u32(in, "matrix cols");
  std::vector<float> buffer(static_cast<std::size_t>(rows) * cols);
  if (!in.read(reinterpret_cast<char*>(buffer.data()),
               static_cast<std::streamsize>(buffer.size() * sizeof(float)))) {
    throw DataError("matrix block truncated: expected " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " floats");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < buffer.size(); ++i) m.data()[i] = buffer[i];
  return m;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  write_matrix(out, m);
  if (!out) throw Error("write failed for " + path.string());
}

Matrix load_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  Matrix m = read_matrix(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError(path.string() + ": trailing bytes after matrix block");
  }
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  auto tensors = params.tensors();
  auto out = open_out(path);
  out.write(kCheckpointMagic, 8);
  write_u32(out, static_cast<std::uint32_t>(tensors.size() + 2));
  auto put = [&](const std::string& name, const Matrix& m) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_matrix(out, m);
  };
  for (const auto& [name, m] : tensors) put(name, *m);
  put("encoder.keep_prob", Matrix(1, 1, params.encoder.trunk.keep_prob));
  put("decoder.keep_prob", Matrix(1, 1, params.decoder.trunk.keep_prob));
  if (!out) throw Error("write failed for " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  auto in = open_in(path);
  read_magic(in, kCheckpointMagic, "checkpoint");
  const std::uint32_t count = read_u32(in, "tensor count");
  std::map<std::string, Matrix> named;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t len = read_u32(in, "tensor name length");
    if (len > 4096) throw DataError("checkpoint: implausible tensor name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw DataError("checkpoint: truncated tensor name");
    if (!named.emplace(name, read_matrix(in)).second) {
      throw DataError("checkpoint: duplicate tensor " + name);
    }
  }

  auto take = [&](const std::string& name) {
    auto it = named.find(name);
    if (it == named.end()) throw DataError("checkpoint: missing tensor " + name);
    Matrix m = std::move(it->second);
    named.erase(it);
    return m;
  };
  auto take_dense = [&](const std::string& prefix) {
    return Dense{take(prefix + ".weight"), take(prefix + ".bias")};
  };
  auto count_hidden = [&](const std::string& prefix) {
    std::size_t n = 0;
    while (named.count(prefix + std::to_string(n) + ".weight")) ++n;
    return n;
  };

  ModelParams p;
  const std::size_t enc_hidden = count_hidden("encoder.hidden");
  for (std::size_t i = 0; i < enc_hidden; ++i) {
    p.encoder.trunk.hidden.push_back(take_dense("encoder.hidden" + std::to_string(i)));
  }
  p.encoder.mean_head = take_dense("encoder.mean_head");
  p.encoder.logvar_head = take_dense("encoder.logvar_head");
  const std::size_t dec_hidden = count_hidden("decoder.hidden");
  for (std::size_t i = 0; i < dec_hidden; ++i) {
    p.decoder.trunk.hidden.push_back(take_dense("decoder.hidden" + std::to_string(i)));
  }
  p.decoder.output = take_dense("decoder.output");
  p.prior.w_mean = take("prior.w_mean");
  p.prior.w_logvar = take("prior.w_logvar");
  p.encoder.trunk.keep_prob = take("encoder.keep_prob")(0, 0);
  p.decoder.trunk.keep_prob = take("decoder.keep_prob")(0, 0);
  if (!named.empty()) throw DataError("checkpoint: unexpected tensor " + named.begin()->first);
  p.validate();
  return p;
}

}  // namespace dgzsl
