#pragma once

#include <istream>
#include <ostream>

#include "mmg/nn/mlp.hpp"

namespace mmg::nn {

// Binary (little-endian) network serialization. Writing then reading yields
// bit-identical parameters and optimizer moments.

void write_mlp(std::ostream& out, const Mlp& net);
Mlp read_mlp(std::istream& in);

void write_adam(std::ostream& out, const AdamState& st);
AdamState read_adam(std::istream& in);

void write_f64(std::ostream& out, double v);
double read_f64(std::istream& in);
void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);
void write_f64_array(std::ostream& out, std::span<const double> v);
std::vector<double> read_f64_array(std::istream& in);

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mmg::nn
