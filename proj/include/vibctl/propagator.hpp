#pragma once

// Chebychev propagation under the two-channel Hamiltonian.
//
// Within each time step the field is frozen at its staggered midpoint sample
// and exp(-i H dt) is expanded in Chebychev polynomials of the spectrum-scaled
// Hamiltonian. The field is real and the channel blocks symmetric, so the
// backward (adjoint) propagation uses the same kernel with dt -> -dt.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "field.hpp"
#include "hamiltonian.hpp"
#include "state.hpp"

namespace vibctl {

struct PropagationOptions {
  double tolerance = 1e-12;        ///< per-step truncation error of the expansion
  double max_norm_drift = 1e-6;    ///< abort threshold on |norm - norm0|
  int max_order_slack = 40;        ///< max order = 10 * R + slack, R = dt (E_max - E_min) / 2
};

enum class Direction { Forward, Backward };

/// Storage for intermediate states, indexed by state-time index 0..n_steps.
class TrajectoryStore {
 public:
  virtual ~TrajectoryStore() = default;
  virtual void reset(int n_points, int n_steps, double dt) = 0;
  virtual void put(int index, const StateVector& s) = 0;
  virtual StateVector get(int index) const = 0;
  virtual int n_steps() const = 0;
};

class MemoryTrajectory final : public TrajectoryStore {
 public:
  void reset(int, int n_steps, double) override { states_.assign(n_steps + 1, StateVector{}); }
  void put(int index, const StateVector& s) override { states_.at(index) = s; }
  StateVector get(int index) const override {
    const auto& s = states_.at(index);
    if (s.size() == 0) throw InvalidInput("trajectory: state " + std::to_string(index) + " was never stored");
    return s;
  }
  int n_steps() const override { return static_cast<int>(states_.size()) - 1; }

 private:
  std::vector<StateVector> states_;
};

/// Fixed-size binary records on disk.
///
/// Layout: 32-byte header {char magic[8] = "VIBTRAJ1", uint64 n_points,
/// uint64 n_steps, float64 dt}, then n_steps + 1 records of 2 n_points complex
/// values (ground then excited), each complex as two float64. Little-endian.
class DiskTrajectory final : public TrajectoryStore {
 public:
  static constexpr std::array<char, 8> kMagic{'V', 'I', 'B', 'T', 'R', 'A', 'J', '1'};
  static constexpr std::size_t kHeaderBytes = 32;

  explicit DiskTrajectory(std::string path, bool remove_on_close = true)
      : path_(std::move(path)), remove_(remove_on_close) {}
  ~DiskTrajectory() override {
    file_.close();
    if (remove_) {
      std::error_code ec;
      std::filesystem::remove(path_, ec);
    }
  }
  DiskTrajectory(const DiskTrajectory&) = delete;
  DiskTrajectory& operator=(const DiskTrajectory&) = delete;

  void reset(int n_points, int n_steps, double dt) override {
    file_.close();
    file_.open(path_, std::ios::binary | std::ios::in | std::ios::out | std::ios::trunc);
    if (!file_) throw IoFailure("cannot open trajectory spill file " + path_);
    n_points_ = n_points;
    n_steps_ = n_steps;
    char header[kHeaderBytes] = {};
    std::memcpy(header, kMagic.data(), 8);
    put_le(header + 8, static_cast<std::uint64_t>(n_points));
    put_le(header + 16, static_cast<std::uint64_t>(n_steps));
    put_le(header + 24, std::bit_cast<std::uint64_t>(dt));
    file_.write(header, kHeaderBytes);
    file_.flush();
    buffer_.assign(record_bytes(), 0);
    if (!file_) throw IoFailure("trajectory spill header write failed: " + path_);
  }

  void put(int index, const StateVector& s) override {
    check(index, s.size());
    char* p = buffer_.data();
    for (const auto* comp : {&s.g, &s.e}) {
      for (Eigen::Index j = 0; j < comp->size(); ++j) {
        put_le(p, std::bit_cast<std::uint64_t>((*comp)(j).real()));
        put_le(p + 8, std::bit_cast<std::uint64_t>((*comp)(j).imag()));
        p += 16;
      }
    }
    file_.seekp(static_cast<std::streamoff>(offset(index)));
    file_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!file_) throw IoFailure("trajectory spill write failed at record " + std::to_string(index));
  }

  StateVector get(int index) const override {
    check(index, n_points_);
    file_.seekg(static_cast<std::streamoff>(offset(index)));
    file_.read(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!file_) throw IoFailure("trajectory spill read failed at record " + std::to_string(index));
    StateVector s(n_points_);
    const char* p = buffer_.data();
    for (auto* comp : {&s.g, &s.e}) {
      for (Eigen::Index j = 0; j < comp->size(); ++j) {
        (*comp)(j) = cplx(std::bit_cast<double>(get_le(p)), std::bit_cast<double>(get_le(p + 8)));
        p += 16;
      }
    }
    return s;
  }

  int n_steps() const override { return n_steps_; }
  const std::string& path() const { return path_; }

 private:
  static void put_le(char* dst, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) dst[b] = static_cast<char>((v >> (8 * b)) & 0xffu);
  }
  static std::uint64_t get_le(const char* src) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(src[b])) << (8 * b);
    return v;
  }
  std::size_t record_bytes() const { return static_cast<std::size_t>(n_points_) * 2 * 16; }
  std::size_t offset(int index) const { return kHeaderBytes + static_cast<std::size_t>(index) * record_bytes(); }
  void check(int index, Eigen::Index n) const {
    if (index < 0 || index > n_steps_) throw InvalidInput("trajectory: index out of range");
    if (n != n_points_) throw InvalidInput("trajectory: state size mismatch");
  }

  std::string path_;
  bool remove_;
  mutable std::fstream file_;
  mutable std::vector<char> buffer_;
  int n_points_ = 0;
  int n_steps_ = 0;
};

/// In-memory store if the trajectory fits in the budget, otherwise a spill
/// file in spill_dir.
inline std::unique_ptr<TrajectoryStore> make_trajectory_store(int n_points, int n_steps, std::size_t budget_bytes,
                                                              const std::string& spill_dir,
                                                              const std::string& tag = "trajectory") {
  const std::size_t need = static_cast<std::size_t>(n_steps + 1) * static_cast<std::size_t>(n_points) * 2 * 16;
  if (need <= budget_bytes) return std::make_unique<MemoryTrajectory>();
  std::error_code ec;
  std::filesystem::create_directories(spill_dir, ec);
  if (ec) throw IoFailure("cannot create spill directory " + spill_dir + ": " + ec.message());
  return std::make_unique<DiskTrajectory>((std::filesystem::path(spill_dir) / (tag + ".spill")).string());
}

/// Reusable buffers and expansion coefficients for repeated Chebychev steps.
class ChebychevPropagator {
 public:
  using Block = Eigen::Matrix<double, Eigen::Dynamic, 4>;  // g_re g_im e_re e_im, weight-normalized

  explicit ChebychevPropagator(const ChannelSystem& sys, PropagationOptions opts = {})
      : sys_(&sys), opts_(opts) {
    const auto n = sys.n_points();
    for (auto* b : {&prev_, &cur_, &next_, &acc_, &tmp_}) b->resize(n, 4);
  }

  /// Fix the spectral enclosure used by subsequent steps.
  void set_bounds(double e_min, double e_max, double dt) {
    if (!(e_max > e_min)) e_max = e_min + 1e-12;
    if (bounds_ && e_min == e_min_ && e_max == e_max_ && dt == dt_) return;
    e_min_ = e_min;
    e_max_ = e_max;
    dt_ = dt;
    bounds_ = true;
    const double radius = 0.5 * (e_max - e_min) * std::abs(dt);
    const int max_order = static_cast<int>(10.0 * radius) + opts_.max_order_slack;
    coeffs_.clear();
    for (int k = 0; k <= max_order; ++k) {
      const double c = (k == 0 ? 1.0 : 2.0) * std::cyl_bessel_j(static_cast<double>(k), radius);
      coeffs_.push_back(c);
      if (k > radius && std::abs(c) < opts_.tolerance && k >= 2) return;
    }
    throw NumericalFailure("chebychev: expansion not converged within " + std::to_string(max_order) +
                           " terms (spectral radius * dt = " + std::to_string(radius) + ")");
  }

  /// Bounds enclosing H(eps) for every |eps| <= eps_cap.
  void set_field_cap(double eps_cap, double dt) {
    const auto [lo, hi] = spectral_bounds(*sys_, eps_cap);
    cap_ = eps_cap;
    set_bounds(lo, hi, dt);
  }

  /// Current cap; a step with |eps| above it widens the bounds first.
  double field_cap() const { return cap_; }
  int order() const { return static_cast<int>(coeffs_.size()) - 1; }

  void to_block(const StateVector& s, Block& b) const {
    const auto& sw = sys_->sqrt_w;
    b.col(0) = s.g.real().cwiseProduct(sw);
    b.col(1) = s.g.imag().cwiseProduct(sw);
    b.col(2) = s.e.real().cwiseProduct(sw);
    b.col(3) = s.e.imag().cwiseProduct(sw);
  }
  void from_block(const Block& b, StateVector& s) const {
    const auto& sw = sys_->sqrt_w;
    s.g.real() = b.col(0).cwiseQuotient(sw);
    s.g.imag() = b.col(1).cwiseQuotient(sw);
    s.e.real() = b.col(2).cwiseQuotient(sw);
    s.e.imag() = b.col(3).cwiseQuotient(sw);
  }

  /// psi <- exp(-/+ i H(eps) dt) psi for Forward/Backward.
  void step(StateVector& psi, double eps, double dt, Direction dir) {
    if (!bounds_ || std::abs(eps) > cap_ || dt != dt_) {
      set_field_cap(std::max(std::abs(eps) * 1.5, cap_), dt);
    }
    step_fixed(psi, eps, dir);
  }

  /// As step(), with the bounds left exactly as set.
  void step_fixed(StateVector& psi, double eps, Direction dir) {
    if (!bounds_) throw InvalidInput("chebychev: spectral bounds not set");
    to_block(psi, cur_);
    advance(cur_, eps, dir);
    from_block(acc_, psi);
  }

  const ChannelSystem& system() const { return *sys_; }

 private:
  void apply_scaled(const Block& in, Block& out, double eps, double center, double inv_half) {
    const double coupling = sys_->dipole * eps;
    if (sys_->shared_kinetic) {
      // One pass over T for both channels, potentials on the diagonal.
      out.noalias() = sys_->kinetic.matrix * in;
      out.leftCols<2>() += (sys_->v_g.array() - center).matrix().asDiagonal() * in.leftCols<2>();
      out.rightCols<2>() += (sys_->v_e.array() - center).matrix().asDiagonal() * in.rightCols<2>();
    } else {
      out.leftCols<2>().noalias() = sys_->h_g * in.leftCols<2>();
      out.rightCols<2>().noalias() = sys_->h_e * in.rightCols<2>();
      out -= center * in;
    }
    out.leftCols<2>() += coupling * in.rightCols<2>();
    out.rightCols<2>() += coupling * in.leftCols<2>();
    out *= inv_half;
  }

  // acc += c * (-/+ i)^k * phi
  static void accumulate(Block& acc, const Block& phi, double c, int k, Direction dir) {
    int phase = k % 4;  // (-i)^k: 1, -i, -1, i
    if (dir == Direction::Backward && (phase == 1 || phase == 3)) phase = 4 - phase;
    switch (phase) {
      case 0:
        acc += c * phi;
        break;
      case 2:
        acc -= c * phi;
        break;
      case 1:  // -i (x + i y) = y - i x
        acc.col(0) += c * phi.col(1);
        acc.col(1) -= c * phi.col(0);
        acc.col(2) += c * phi.col(3);
        acc.col(3) -= c * phi.col(2);
        break;
      case 3:  // i (x + i y) = -y + i x
        acc.col(0) -= c * phi.col(1);
        acc.col(1) += c * phi.col(0);
        acc.col(2) -= c * phi.col(3);
        acc.col(3) += c * phi.col(2);
        break;
    }
  }

  void advance(const Block& start, double eps, Direction dir) {
    const double center = 0.5 * (e_max_ + e_min_);
    const double inv_half = 2.0 / (e_max_ - e_min_);
    prev_ = start;
    acc_ = coeffs_[0] * prev_;
    if (coeffs_.size() > 1) {
      apply_scaled(prev_, cur_, eps, center, inv_half);
      accumulate(acc_, cur_, coeffs_[1], 1, dir);
      for (std::size_t k = 2; k < coeffs_.size(); ++k) {
        apply_scaled(cur_, next_, eps, center, inv_half);
        next_ = 2.0 * next_ - prev_;
        accumulate(acc_, next_, coeffs_[k], static_cast<int>(k), dir);
        prev_.swap(cur_);
        cur_.swap(next_);
      }
    }
    // Global phase exp(-/+ i center dt).
    const double angle = (dir == Direction::Forward ? -1.0 : 1.0) * center * dt_;
    const double c = std::cos(angle), s = std::sin(angle);
    tmp_ = acc_;
    acc_.col(0) = c * tmp_.col(0) - s * tmp_.col(1);
    acc_.col(1) = c * tmp_.col(1) + s * tmp_.col(0);
    acc_.col(2) = c * tmp_.col(2) - s * tmp_.col(3);
    acc_.col(3) = c * tmp_.col(3) + s * tmp_.col(2);
  }

  const ChannelSystem* sys_;
  PropagationOptions opts_;
  Block prev_, cur_, next_, acc_, tmp_;
  std::vector<double> coeffs_;
  double e_min_ = 0.0, e_max_ = 0.0, dt_ = 0.0, cap_ = 0.0;
  bool bounds_ = false;
};

/// One step exp(-i H(eps_mid) dt) psi with the given spectral enclosure.
inline StateVector chebychev_step(const StateVector& psi, const ChannelSystem& sys, double eps_mid, double dt,
                                  std::pair<double, double> bounds, double tol = 1e-12) {
  if (!(tol > 0.0 && tol <= 1e-6)) throw InvalidInput("chebychev_step: tol must lie in (0, 1e-6]");
  if (psi.size() != sys.n_points()) throw InvalidInput("chebychev_step: state/system size mismatch");
  const auto [lo, hi] = spectral_bounds(sys, std::abs(eps_mid));
  const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  if (lo < bounds.first - slack || hi > bounds.second + slack) {
    throw InvalidInput("chebychev_step: bounds do not enclose the spectrum of H(eps_mid)");
  }
  PropagationOptions opts;
  opts.tolerance = tol;
  ChebychevPropagator prop(sys, opts);
  prop.set_bounds(bounds.first, bounds.second, dt);
  StateVector out = psi;
  prop.step_fixed(out, eps_mid, Direction::Forward);
  return out;
}

namespace detail {
inline void check_propagation_inputs(const StateVector& psi, const ControlField& field, const ChannelSystem& sys,
                                     const TimeGrid& tg) {
  if (psi.size() != sys.n_points()) throw InvalidInput("propagate: state/system size mismatch");
  if (!(field.tgrid == tg)) throw InvalidInput("propagate: field is not defined on the given time grid");
  field.validate();
}
}  // namespace detail

/// Forward propagation 0 -> T; every state (index 0..n_steps) goes to store if given.
inline StateVector propagate(const StateVector& psi0, const ControlField& field, const ChannelSystem& sys,
                             const TimeGrid& tg, TrajectoryStore* store = nullptr, PropagationOptions opts = {}) {
  detail::check_propagation_inputs(psi0, field, sys, tg);
  ChebychevPropagator prop(sys, opts);
  prop.set_field_cap(field.max_abs(), tg.dt);
  const double norm0 = sys.norm2(psi0);
  StateVector psi = psi0;
  if (store) {
    store->reset(sys.n_points(), tg.n_steps, tg.dt);
    store->put(0, psi);
  }
  for (int k = 0; k < tg.n_steps; ++k) {
    prop.step(psi, field.values[k], tg.dt, Direction::Forward);
    if (store) store->put(k + 1, psi);
  }
  const double drift = std::abs(sys.norm2(psi) - norm0);
  if (drift > opts.max_norm_drift) {
    throw NumericalFailure("propagate: norm drift " + std::to_string(drift) + " exceeds tolerance");
  }
  return psi;
}

/// Backward propagation T -> 0 of chi(T); returns chi(0). store receives
/// chi(t_k) at index k for every k.
inline StateVector propagate_adjoint(const StateVector& chi_T, const ControlField& field, const ChannelSystem& sys,
                                     const TimeGrid& tg, TrajectoryStore* store = nullptr,
                                     PropagationOptions opts = {}) {
  detail::check_propagation_inputs(chi_T, field, sys, tg);
  ChebychevPropagator prop(sys, opts);
  prop.set_field_cap(field.max_abs(), tg.dt);
  const double norm0 = sys.norm2(chi_T);
  StateVector chi = chi_T;
  if (store) {
    store->reset(sys.n_points(), tg.n_steps, tg.dt);
    store->put(tg.n_steps, chi);
  }
  for (int k = tg.n_steps - 1; k >= 0; --k) {
    prop.step(chi, field.values[k], tg.dt, Direction::Backward);
    if (store) store->put(k, chi);
  }
  const double drift = std::abs(sys.norm2(chi) - norm0);
  if (drift > opts.max_norm_drift * std::max(1.0, norm0)) {
    throw NumericalFailure("propagate_adjoint: norm drift " + std::to_string(drift) + " exceeds tolerance");
  }
  return chi;
}

}  // namespace vibctl
