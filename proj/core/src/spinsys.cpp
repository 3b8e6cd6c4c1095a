#include "partrace/spinsys.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace partrace {

namespace {

// Combined per-pair coefficients; sigma^x sigma^x and sigma^y sigma^y share
// the same bit-flip mask, so they are fused into one real stencil.
struct PairTerm {
  int i = 0;
  int j = 0;
  double jx = 0.0;
  double jy = 0.0;
  double jz = 0.0;
};

std::vector<PairTerm> merge_pairs(const CouplingSpec& spec) {
  std::map<std::pair<int, int>, PairTerm> by_pair;
  auto add = [&](const std::vector<Coupling>& list, double PairTerm::*field) {
    for (const Coupling& c : list) {
      const auto key = std::minmax(c.i, c.j);
      PairTerm& t = by_pair[{key.first, key.second}];
      t.i = key.first;
      t.j = key.second;
      t.*field += c.value;
    }
  };
  add(spec.jx, &PairTerm::jx);
  add(spec.jy, &PairTerm::jy);
  add(spec.jz, &PairTerm::jz);
  std::vector<PairTerm> out;
  out.reserve(by_pair.size());
  for (auto& [key, term] : by_pair) out.push_back(term);
  return out;
}

void check_size(const CouplingSpec& spec, const HamiltonianOptions& options) {
  spec.validate();
  if (spec.n_sites > options.max_sites) {
    throw std::invalid_argument("Hamiltonian with " + std::to_string(spec.n_sites) +
                                " sites exceeds the configured maximum of " +
                                std::to_string(options.max_sites));
  }
  if (spec.n_sites > 62) throw std::invalid_argument("at most 62 sites are addressable");
}

// Site s occupies bit (N-1-s) of the basis index; bit 0 is spin up (sz = +1).
inline std::uint64_t site_mask(int n_sites, int site) {
  return std::uint64_t{1} << (n_sites - 1 - site);
}

inline double sz(std::uint64_t state, std::uint64_t mask) {
  return (state & mask) ? -1.0 : 1.0;
}

struct Stencil {
  int n_sites = 0;
  double half_h = 0.0;
  struct Flip {
    std::uint64_t mask_i;
    std::uint64_t mask_j;
    double same;  // amplitude when the two bits agree: Jx - Jy
    double diff;  // amplitude when they differ: Jx + Jy
  };
  struct Diag {
    std::uint64_t mask_i;
    std::uint64_t mask_j;
    double jz;
  };
  std::vector<Flip> flips;
  std::vector<Diag> diags;

  explicit Stencil(const CouplingSpec& spec) : n_sites(spec.n_sites), half_h(0.5 * spec.field_h) {
    for (const PairTerm& t : merge_pairs(spec)) {
      const std::uint64_t mi = site_mask(n_sites, t.i);
      const std::uint64_t mj = site_mask(n_sites, t.j);
      // sy sy |ab> = (i^a')(i^b') |~a ~b> with phases +i for up, -i for down:
      // equal bits give -1, opposite bits give +1.
      if (t.jx != 0.0 || t.jy != 0.0) flips.push_back({mi, mj, t.jx - t.jy, t.jx + t.jy});
      if (t.jz != 0.0) diags.push_back({mi, mj, t.jz});
    }
  }

  double diagonal(std::uint64_t state) const {
    double d = 0.0;
    for (const Diag& z : diags) d += z.jz * sz(state, z.mask_i) * sz(state, z.mask_j);
    if (half_h != 0.0) {
      for (int s = 0; s < n_sites; ++s) d += half_h * sz(state, site_mask(n_sites, s));
    }
    return d;
  }

  static double flip_amplitude(const Flip& f, std::uint64_t state) {
    const bool bi = (state & f.mask_i) != 0;
    const bool bj = (state & f.mask_j) != 0;
    return bi == bj ? f.same : f.diff;
  }
};

}  // namespace

const std::vector<Coupling>& CouplingSpec::axis(Axis a) const {
  switch (a) {
    case Axis::kX: return jx;
    case Axis::kY: return jy;
    case Axis::kZ: return jz;
  }
  throw std::logic_error("unknown axis");
}

std::vector<Coupling>& CouplingSpec::axis(Axis a) {
  return const_cast<std::vector<Coupling>&>(std::as_const(*this).axis(a));
}

void CouplingSpec::validate() const {
  if (n_sites < 1) throw std::invalid_argument("CouplingSpec: n_sites must be positive");
  if (!std::isfinite(field_h)) throw std::invalid_argument("CouplingSpec: field_h is not finite");
  const char* names[] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    const auto& list = axis(static_cast<Axis>(a));
    std::map<std::pair<int, int>, bool> seen;
    for (const Coupling& c : list) {
      const std::string where = std::string("CouplingSpec: axis ") + names[a] + " pair (" +
                                std::to_string(c.i) + ", " + std::to_string(c.j) + ")";
      if (c.i == c.j) throw std::invalid_argument(where + " is a self-coupling");
      if (c.i < 0 || c.j < 0 || c.i >= n_sites || c.j >= n_sites) {
        throw std::invalid_argument(where + " references a site outside [0, n_sites)");
      }
      if (!std::isfinite(c.value)) throw std::invalid_argument(where + " has a non-finite value");
      const auto key = std::minmax(c.i, c.j);
      if (!seen.emplace(std::pair{key.first, key.second}, true).second) {
        throw std::invalid_argument(where + " appears more than once");
      }
    }
  }
}

BipartiteSplit::BipartiteSplit(int n_sites, int n_sys_sites) : n_sites_(n_sites), n_sys_(n_sys_sites) {
  if (n_sys_sites < 1 || n_sys_sites >= n_sites) {
    throw std::invalid_argument("BipartiteSplit: need 1 <= n_sys_sites < n_sites (got " +
                                std::to_string(n_sys_sites) + " of " + std::to_string(n_sites) + ")");
  }
  if (n_sites > 62) throw std::invalid_argument("BipartiteSplit: too many sites");
  d_s_ = Eigen::Index{1} << n_sys_sites;
  d_b_ = Eigen::Index{1} << (n_sites - n_sys_sites);
}

BipartiteSplit BipartiteSplit::from_dims(Eigen::Index d_s, Eigen::Index d_b) {
  if (d_s < 1 || d_b < 1) throw std::invalid_argument("BipartiteSplit: dimensions must be positive");
  BipartiteSplit s;
  s.d_s_ = d_s;
  s.d_b_ = d_b;
  return s;
}

SparseMatrix assemble_hamiltonian(const CouplingSpec& spec, const HamiltonianOptions& options) {
  check_size(spec, options);
  const Stencil stencil(spec);
  const std::uint64_t dim = std::uint64_t{1} << spec.n_sites;

  SparseMatrix h(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  h.reserve(Eigen::VectorXi::Constant(static_cast<Eigen::Index>(dim),
                                      static_cast<int>(stencil.flips.size()) + 1));
  for (std::uint64_t state = 0; state < dim; ++state) {
    const auto row = static_cast<Eigen::Index>(state);
    const double d = stencil.diagonal(state);
    if (d != 0.0) h.insert(row, row) = d;
    for (const auto& f : stencil.flips) {
      const double amp = Stencil::flip_amplitude(f, state);
      if (amp == 0.0) continue;
      const std::uint64_t target = state ^ f.mask_i ^ f.mask_j;
      h.coeffRef(row, static_cast<Eigen::Index>(target)) += amp;
    }
  }
  h.makeCompressed();
  return h;
}

LinOp build_hamiltonian(const CouplingSpec& spec, const HamiltonianOptions& options) {
  return LinOp::from_sparse(assemble_hamiltonian(spec, options));
}

LinOp build_hamiltonian_matrix_free(const CouplingSpec& spec, const HamiltonianOptions& options) {
  check_size(spec, options);
  auto stencil = std::make_shared<const Stencil>(spec);
  const std::uint64_t dim = std::uint64_t{1} << spec.n_sites;
  Eigen::VectorXd diag(static_cast<Eigen::Index>(dim));
  double bound = 0.0;
  for (std::uint64_t s = 0; s < dim; ++s) {
    diag(static_cast<Eigen::Index>(s)) = stencil->diagonal(s);
    double row = std::abs(diag(static_cast<Eigen::Index>(s)));
    for (const auto& f : stencil->flips) row += std::abs(Stencil::flip_amplitude(f, s));
    bound = std::max(bound, row);
  }
  auto shared_diag = std::make_shared<const Eigen::VectorXd>(std::move(diag));
  return LinOp(
      static_cast<Eigen::Index>(dim),
      [stencil, shared_diag](const Eigen::Ref<const Eigen::MatrixXd>& x,
                             Eigen::Ref<Eigen::MatrixXd> y) {
        const auto n = static_cast<std::uint64_t>(x.rows());
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
          for (std::uint64_t s = 0; s < n; ++s) {
            double acc = (*shared_diag)(static_cast<Eigen::Index>(s)) *
                         x(static_cast<Eigen::Index>(s), c);
            for (const auto& f : stencil->flips) {
              acc += Stencil::flip_amplitude(f, s) *
                     x(static_cast<Eigen::Index>(s ^ f.mask_i ^ f.mask_j), c);
            }
            y(static_cast<Eigen::Index>(s), c) = acc;
          }
        }
      },
      bound);
}

CouplingSpec chain_xx(int n, double j, bool periodic) {
  if (n < 2) throw std::invalid_argument("chain_xx: need at least 2 sites");
  CouplingSpec spec;
  spec.n_sites = n;
  for (int i = 0; i + 1 < n; ++i) {
    spec.jx.push_back({i, i + 1, j});
    spec.jy.push_back({i, i + 1, j});
  }
  if (periodic && n > 2) {
    spec.jx.push_back({0, n - 1, j});
    spec.jy.push_back({0, n - 1, j});
  }
  return spec;
}

CouplingSpec long_range_xx(int n, double alpha) {
  if (std::isinf(alpha) && alpha > 0) return chain_xx(n, 1.0, false);
  if (!(alpha > 0)) throw std::invalid_argument("long_range_xx: alpha must be positive");
  if (n < 2) throw std::invalid_argument("long_range_xx: need at least 2 sites");
  CouplingSpec spec;
  spec.n_sites = n;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = std::pow(static_cast<double>(j - i), -alpha);
      spec.jx.push_back({i, j, v});
      spec.jy.push_back({i, j, v});
    }
  }
  return spec;
}

CouplingSpec kagome_strip(int n_cells, double j0, double j1, double j2, bool periodic) {
  if (n_cells < 1) throw std::invalid_argument("kagome_strip: need at least one cell");
  // Cell c holds sites 5c + {0: bottom-left, 1: bottom-right, 2: centre,
  // 3: top-left, 4: top-right}.
  std::map<std::pair<int, int>, double> edges;
  auto add = [&](int a, int b, double v) { edges[std::minmax(a, b)] += v; };
  for (int c = 0; c < n_cells; ++c) {
    const int base = 5 * c;
    for (int corner : {0, 1, 3, 4}) add(base + 2, base + corner, j0);
    add(base + 0, base + 1, j1);
    add(base + 3, base + 4, j1);
    const bool last = c + 1 == n_cells;
    if (!last || periodic) {
      const int next = last ? 0 : base + 5;
      add(base + 1, next + 0, j2);
      add(base + 4, next + 3, j2);
    }
  }
  CouplingSpec spec;
  spec.n_sites = 5 * n_cells;
  for (const auto& [pair, v] : edges) {
    for (Axis a : {Axis::kX, Axis::kY, Axis::kZ}) spec.axis(a).push_back({pair.first, pair.second, v});
  }
  return spec;
}

CouplingSpec with_field(CouplingSpec spec, double h) {
  spec.field_h = h;
  return spec;
}

Eigen::MatrixXd subsystem_hamiltonian(const CouplingSpec& spec, const BipartiteSplit& split) {
  spec.validate();
  if (split.n_sites() != spec.n_sites) {
    throw std::invalid_argument("subsystem_hamiltonian: split does not match the spin system");
  }
  CouplingSpec sub;
  sub.n_sites = split.n_sys_sites();
  sub.field_h = spec.field_h;
  for (Axis a : {Axis::kX, Axis::kY, Axis::kZ}) {
    for (const Coupling& c : spec.axis(a)) {
      if (c.i < sub.n_sites && c.j < sub.n_sites) sub.axis(a).push_back(c);
    }
  }
  return Eigen::MatrixXd(assemble_hamiltonian(sub, {.max_sites = 62}));
}

}  // namespace partrace
