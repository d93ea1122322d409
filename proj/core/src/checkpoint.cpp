#include "wd/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace wd::ckpt {

namespace {

constexpr char kMagic[4] = {'W', 'D', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

struct Reader {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw std::runtime_error("checkpoint: truncated data");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(bytes.data() + pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

const Section& Checkpoint::section(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("checkpoint: missing section '" + name + "'");
}

std::string serialize(const Checkpoint& c) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(c.d_z));
  put_u32(out, static_cast<std::uint32_t>(c.sections.size()));
  for (const auto& sec : c.sections) {
    put_string(out, sec.name);
    put_u32(out, static_cast<std::uint32_t>(sec.arrays.size()));
    for (const auto& [name, m] : sec.arrays) {
      put_string(out, name);
      put_u32(out, static_cast<std::uint32_t>(m.rows()));
      put_u32(out, static_cast<std::uint32_t>(m.cols()));
      out.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size());
    }
  }
  return out;
}

Checkpoint deserialize(const std::string& bytes) {
  Reader r{bytes};
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic (expected WDM1)");
  }
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  c.d_z = static_cast<int>(r.u32());
  const std::uint32_t n_sections = r.u32();
  for (std::uint32_t i = 0; i < n_sections; ++i) {
    Section sec;
    sec.name = r.str();
    const std::uint32_t n_arrays = r.u32();
    for (std::uint32_t j = 0; j < n_arrays; ++j) {
      std::string name = r.str();
      const std::uint32_t rows = r.u32();
      const std::uint32_t cols = r.u32();
      Matrix m(rows, cols);
      r.need(sizeof(double) * m.size());
      std::memcpy(m.data(), bytes.data() + r.pos, sizeof(double) * m.size());
      r.pos += sizeof(double) * m.size();
      sec.arrays.emplace_back(std::move(name), std::move(m));
    }
    c.sections.push_back(std::move(sec));
  }
  return c;
}

void save(const std::string& path, const Checkpoint& c) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  const std::string bytes = serialize(c);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace wd::ckpt
