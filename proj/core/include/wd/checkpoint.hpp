#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace wd::ckpt {

using Matrix = Eigen::MatrixXd;

// Flat binary parameter container. Layout (little-endian):
//   magic "WDM1" | u32 version | u32 d_z | u32 n_sections
//   per section: u32 name_len | name | u32 n_arrays
//   per array:   u32 name_len | name | u32 rows | u32 cols | rows*cols f64
// Arrays appear in declaration order; round-trips are bit-exact.
struct Section {
  std::string name;
  std::vector<std::pair<std::string, Matrix>> arrays;
};

struct Checkpoint {
  int d_z = 0;
  std::vector<Section> sections;

  const Section& section(const std::string& name) const;  // throws if absent
};

std::string serialize(const Checkpoint& c);
Checkpoint deserialize(const std::string& bytes);  // throws on bad magic/format

void save(const std::string& path, const Checkpoint& c);
Checkpoint load(const std::string& path);

}  // namespace wd::ckpt
