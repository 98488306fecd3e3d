#include "mmg/nn/checkpoint.hpp"

#include <cstring>
#include <limits>

namespace mmg::nn {

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  if (!in) throw CheckpointError("checkpoint: truncated stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_f64_array(std::ostream& out, std::span<const double> v) {
  write_u64(out, v.size());
  for (const double x : v) write_f64(out, x);
}

std::vector<double> read_f64_array(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  if (n > (1ULL << 32)) throw CheckpointError("checkpoint: implausible array length");
  std::vector<double> v(n);
  for (auto& x : v) x = read_f64(in);
  return v;
}

void write_mlp(std::ostream& out, const Mlp& net) {
  const auto& sizes = net.layer_sizes();
  write_u64(out, sizes.size());
  for (const int s : sizes) write_u64(out, static_cast<std::uint64_t>(s));
  write_f64_array(out, net.params());
}

Mlp read_mlp(std::istream& in) {
  const std::uint64_t n_sizes = read_u64(in);
  if (n_sizes < 2 || n_sizes > 64) throw CheckpointError("checkpoint: bad layer count");
  std::vector<int> sizes(n_sizes);
  for (auto& s : sizes) {
    const std::uint64_t v = read_u64(in);
    if (v == 0 || v > std::numeric_limits<int>::max()) throw CheckpointError("checkpoint: bad layer size");
    s = static_cast<int>(v);
  }
  Mlp net(std::move(sizes));
  const auto theta = read_f64_array(in);
  if (theta.size() != net.param_count()) throw CheckpointError("checkpoint: parameter count mismatch");
  std::copy(theta.begin(), theta.end(), net.params().begin());
  return net;
}

void write_adam(std::ostream& out, const AdamState& st) {
  write_f64(out, st.learning_rate);
  write_f64(out, st.beta1);
  write_f64(out, st.beta2);
  write_f64(out, st.epsilon);
  write_u64(out, static_cast<std::uint64_t>(st.step_count));
  write_f64_array(out, st.first_moment);
  write_f64_array(out, st.second_moment);
}

AdamState read_adam(std::istream& in) {
  AdamState st;
  st.learning_rate = read_f64(in);
  st.beta1 = read_f64(in);
  st.beta2 = read_f64(in);
  st.epsilon = read_f64(in);
  st.step_count = static_cast<long>(read_u64(in));
  st.first_moment = read_f64_array(in);
  st.second_moment = read_f64_array(in);
  if (st.first_moment.size() != st.second_moment.size())
    throw CheckpointError("checkpoint: moment size mismatch");
  return st;
}

}  // namespace mmg::nn
