#pragma once

#include "partrace/linop.hpp"

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace partrace {

enum class Axis { kX, kY, kZ };

/// One coupling term J sigma^a_i sigma^a_j. Sites are zero-based, i < j.
struct Coupling {
  int i = 0;
  int j = 0;
  double value = 0.0;

  friend bool operator==(const Coupling&, const Coupling&) = default;
};

/// Symbolic spin-1/2 Hamiltonian
///   H = sum_{i<j} [Jx sx_i sx_j + Jy sy_i sy_j + Jz sz_i sz_j] + (h/2) sum_i sz_i.
/// Site 0 is the leftmost (slowest varying) tensor factor.
struct CouplingSpec {
  int n_sites = 0;
  std::vector<Coupling> jx;
  std::vector<Coupling> jy;
  std::vector<Coupling> jz;
  double field_h = 0.0;

  const std::vector<Coupling>& axis(Axis a) const;
  std::vector<Coupling>& axis(Axis a);

  /// Throws std::invalid_argument naming the offending entry.
  void validate() const;

  friend bool operator==(const CouplingSpec&, const CouplingSpec&) = default;
};

/// Subsystem (s) is the leading `n_sys_sites` sites; (b) is the rest.
class BipartiteSplit {
 public:
  BipartiteSplit(int n_sites, int n_sys_sites);

  int n_sites() const noexcept { return n_sites_; }
  int n_sys_sites() const noexcept { return n_sys_; }
  Eigen::Index d_s() const noexcept { return d_s_; }
  Eigen::Index d_b() const noexcept { return d_b_; }
  Eigen::Index d_t() const noexcept { return d_s_ * d_b_; }

  /// Split over raw dimensions; used for operators that are not spin systems.
  static BipartiteSplit from_dims(Eigen::Index d_s, Eigen::Index d_b);

 private:
  BipartiteSplit() = default;
  int n_sites_ = 0;
  int n_sys_ = 0;
  Eigen::Index d_s_ = 1;
  Eigen::Index d_b_ = 1;
};

struct HamiltonianOptions {
  /// Assembly refuses larger systems instead of exhausting memory.
  int max_sites = 24;
};

/// Assembles H in compressed row storage with real arithmetic only.
SparseMatrix assemble_hamiltonian(const CouplingSpec& spec, const HamiltonianOptions& options = {});

/// H as a LinOp backed by the assembled sparse matrix.
LinOp build_hamiltonian(const CouplingSpec& spec, const HamiltonianOptions& options = {});

/// H as a LinOp that evaluates the spin-flip stencil on the fly, without
/// storing matrix entries. Agrees with build_hamiltonian to rounding.
LinOp build_hamiltonian_matrix_free(const CouplingSpec& spec,
                                    const HamiltonianOptions& options = {});

/// Nearest-neighbour XX chain, Jx = Jy = j, Jz = 0.
CouplingSpec chain_xx(int n, double j, bool periodic);

inline constexpr double kInfiniteAlpha = std::numeric_limits<double>::infinity();

/// XX chain with Jx = Jy = |i-j|^-alpha for all pairs. alpha = +inf gives
/// chain_xx(n, 1, open).
CouplingSpec long_range_xx(int n, double alpha);

/// Heisenberg Kagome strip, 5 sites per cell. See docs/kagome_strip.md for
/// the cell template and site numbering.
CouplingSpec kagome_strip(int n_cells, double j0, double j1, double j2, bool periodic);

/// Copy of `spec` with a different Zeeman field.
CouplingSpec with_field(CouplingSpec spec, double h);

/// Dense H_s: couplings with both sites in (s) plus the field on (s) sites.
Eigen::MatrixXd subsystem_hamiltonian(const CouplingSpec& spec, const BipartiteSplit& split);

}  // namespace partrace
