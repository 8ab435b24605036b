#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mlrfit/types.hpp"

namespace mlrfit {

/// Hierarchical row/column partition of an m x n index grid.
///
/// Level l (0-based) splits the rows into p_l contiguous blocks and the
/// columns into p_l contiguous blocks; level 0 is a single block. The
/// partition at level l must refine the one at level l-1 (block cut points
/// nest). Global permutations map contiguous indices back to the original
/// ordering: contiguous entry (i, j) corresponds to original entry
/// (row_perm[i], col_perm[j]).
class HierPartition {
 public:
  HierPartition() = default;

  HierPartition(std::vector<std::vector<Index>> row_blocks,
                std::vector<std::vector<Index>> col_blocks,
                std::vector<Index> row_perm, std::vector<Index> col_perm)
      : row_blocks_(std::move(row_blocks)),
        col_blocks_(std::move(col_blocks)),
        row_perm_(std::move(row_perm)),
        col_perm_(std::move(col_perm)) {
    rebuild_offsets();
  }

  /// Single-level partition (one block, identity permutations).
  static HierPartition single_level(Index m, Index n) {
    std::vector<Index> rp(m), cp(n);
    std::iota(rp.begin(), rp.end(), Index{0});
    std::iota(cp.begin(), cp.end(), Index{0});
    return HierPartition({{m}}, {{n}}, std::move(rp), std::move(cp));
  }

  Index num_levels() const { return static_cast<Index>(row_blocks_.size()); }
  Index rows() const { return static_cast<Index>(row_perm_.size()); }
  Index cols() const { return static_cast<Index>(col_perm_.size()); }

  Index num_blocks(Index level) const {
    return static_cast<Index>(row_blocks_[level].size());
  }
  const std::vector<Index>& row_sizes(Index level) const {
    return row_blocks_[level];
  }
  const std::vector<Index>& col_sizes(Index level) const {
    return col_blocks_[level];
  }
  Index row_size(Index level, Index block) const {
    return row_blocks_[level][block];
  }
  Index col_size(Index level, Index block) const {
    return col_blocks_[level][block];
  }
  Index row_offset(Index level, Index block) const {
    return row_offsets_[level][block];
  }
  Index col_offset(Index level, Index block) const {
    return col_offsets_[level][block];
  }

  const std::vector<Index>& row_perm() const { return row_perm_; }
  const std::vector<Index>& col_perm() const { return col_perm_; }
  std::vector<Index>& mutable_row_perm() { return row_perm_; }
  std::vector<Index>& mutable_col_perm() { return col_perm_; }

  /// Block index containing contiguous row i at the given level.
  Index block_of_row(Index level, Index i) const {
    const auto& off = row_offsets_[level];
    auto it = std::upper_bound(off.begin(), off.end(), i);
    return static_cast<Index>(it - off.begin()) - 1;
  }
  Index block_of_col(Index level, Index j) const {
    const auto& off = col_offsets_[level];
    auto it = std::upper_bound(off.begin(), off.end(), j);
    return static_cast<Index>(it - off.begin()) - 1;
  }

  /// Appends a level given its block sizes; caller must preserve refinement.
  void append_level(std::vector<Index> row_sizes, std::vector<Index> col_sizes) {
    row_blocks_.push_back(std::move(row_sizes));
    col_blocks_.push_back(std::move(col_sizes));
    rebuild_offsets();
  }

  void validate() const {
    const Index L = num_levels();
    require(L >= 1, Errc::shape_mismatch, "partition must have at least one level");
    require(static_cast<Index>(col_blocks_.size()) == L, Errc::shape_mismatch,
            "row/column level counts differ");
    const Index m = rows();
    const Index n = cols();
    require(row_blocks_[0].size() == 1 && col_blocks_[0].size() == 1,
            Errc::shape_mismatch, "level 1 must consist of a single block");
    for (Index l = 0; l < L; ++l) {
      require(row_blocks_[l].size() == col_blocks_[l].size(),
              Errc::shape_mismatch,
              "row and column block counts differ on level " + std::to_string(l + 1));
      check_sizes(row_blocks_[l], m, "row", l);
      check_sizes(col_blocks_[l], n, "column", l);
    }
    for (Index l = 1; l < L; ++l) {
      require(cuts_nested(row_offsets_[l - 1], row_offsets_[l]), Errc::not_refinement,
              "row partition at level " + std::to_string(l + 1) +
                  " does not refine level " + std::to_string(l));
      require(cuts_nested(col_offsets_[l - 1], col_offsets_[l]), Errc::not_refinement,
              "column partition at level " + std::to_string(l + 1) +
                  " does not refine level " + std::to_string(l));
    }
    check_permutation(row_perm_, m, "row");
    check_permutation(col_perm_, n, "column");
  }

  bool operator==(const HierPartition& other) const {
    return row_blocks_ == other.row_blocks_ && col_blocks_ == other.col_blocks_ &&
           row_perm_ == other.row_perm_ && col_perm_ == other.col_perm_;
  }

 private:
  static void check_sizes(const std::vector<Index>& sizes, Index total,
                          const char* what, Index level) {
    Index sum = 0;
    for (Index s : sizes) {
      require(s > 0, Errc::shape_mismatch,
              std::string(what) + " block of size zero on level " +
                  std::to_string(level + 1));
      sum += s;
    }
    require(sum == total, Errc::shape_mismatch,
            std::string(what) + " block sizes on level " + std::to_string(level + 1) +
                " do not sum to the matrix dimension");
  }

  static bool cuts_nested(const std::vector<Index>& coarse,
                          const std::vector<Index>& fine) {
    // Offsets are sorted cut points including 0 and the total size.
    return std::includes(fine.begin(), fine.end(), coarse.begin(), coarse.end());
  }

  static void check_permutation(const std::vector<Index>& perm, Index n,
                                const char* what) {
    require(static_cast<Index>(perm.size()) == n, Errc::bad_permutation,
            std::string(what) + " permutation has wrong length");
    std::vector<char> seen(static_cast<size_t>(n), 0);
    for (Index v : perm) {
      require(v >= 0 && v < n && !seen[static_cast<size_t>(v)], Errc::bad_permutation,
              std::string(what) + " permutation is not a bijection");
      seen[static_cast<size_t>(v)] = 1;
    }
  }

  void rebuild_offsets() {
    row_offsets_.assign(row_blocks_.size(), {});
    col_offsets_.assign(col_blocks_.size(), {});
    for (size_t l = 0; l < row_blocks_.size(); ++l) {
      row_offsets_[l] = prefix(row_blocks_[l]);
      col_offsets_[l] = prefix(col_blocks_[l]);
    }
  }

  static std::vector<Index> prefix(const std::vector<Index>& sizes) {
    std::vector<Index> off(sizes.size() + 1, 0);
    for (size_t k = 0; k < sizes.size(); ++k) off[k + 1] = off[k] + sizes[k];
    return off;
  }

  std::vector<std::vector<Index>> row_blocks_, col_blocks_;
  std::vector<Index> row_perm_, col_perm_;
  // Per level: block offsets with a trailing total (size p_l + 1).
  std::vector<std::vector<Index>> row_offsets_, col_offsets_;
};

/// Per-level ranks (r_1, ..., r_L); the MLR-rank is their sum.
struct RankAllocation {
  std::vector<Index> ranks;

  RankAllocation() = default;
  explicit RankAllocation(std::vector<Index> r) : ranks(std::move(r)) {}

  Index total() const {
    return std::accumulate(ranks.begin(), ranks.end(), Index{0});
  }
  Index levels() const { return static_cast<Index>(ranks.size()); }

  bool operator==(const RankAllocation& other) const { return ranks == other.ranks; }
};

/// All rank placed on the top level: (r, 0, ..., 0).
inline RankAllocation top_allocation(Index r, Index levels) {
  std::vector<Index> ranks(static_cast<size_t>(levels), 0);
  ranks[0] = r;
  return RankAllocation(std::move(ranks));
}

/// All rank placed on the bottom level: (0, ..., 0, r).
inline RankAllocation bottom_allocation(Index r, Index levels) {
  std::vector<Index> ranks(static_cast<size_t>(levels), 0);
  ranks.back() = r;
  return RankAllocation(std::move(ranks));
}

/// Nearly uniform allocation: floor(r/L) per level with the remainder added
/// to the top level.
inline RankAllocation uniform_allocation(Index r, Index levels) {
  std::vector<Index> ranks(static_cast<size_t>(levels), r / levels);
  ranks[0] += r - (r / levels) * levels;
  return RankAllocation(std::move(ranks));
}

/// Multilevel low rank matrix: factors B_{l,k} (m_{l,k} x r_l) and C_{l,k}
/// (n_{l,k} x r_l) for every level/block, under the attached partition.
/// The dense value places sum_l blkdiag_k(B_{l,k} C_{l,k}^T) at the original
/// indices through the partition's permutations.
///
/// For kind symmetric, C_{l,k} = B_{l,k} diag(signs_{l,k}) with signs in
/// {-1, +1}; for kind psd, C_{l,k} = B_{l,k}. Both invariants are maintained
/// by the block setters and checked by validate().
class MlrMatrix {
 public:
  MlrMatrix() = default;

  MlrMatrix(HierPartition partition, RankAllocation alloc, Kind kind = Kind::general)
      : partition_(std::move(partition)), alloc_(std::move(alloc)), kind_(kind) {
    allocate_zero_factors();
  }

  const HierPartition& partition() const { return partition_; }
  const RankAllocation& alloc() const { return alloc_; }
  Kind kind() const { return kind_; }
  Index rows() const { return partition_.rows(); }
  Index cols() const { return partition_.cols(); }
  Index num_levels() const { return partition_.num_levels(); }
  Index mlr_rank() const { return alloc_.total(); }

  const Matrix& left(Index level, Index block) const { return left_[level][block]; }
  const Matrix& right(Index level, Index block) const { return right_[level][block]; }
  const Vector& signs(Index level, Index block) const { return signs_[level][block]; }

  void set_block(Index level, Index block, Matrix b, Matrix c) {
    require(kind_ == Kind::general, Errc::unsupported_kind,
            "set_block applies to general matrices only");
    check_block_shapes(level, block, b, c);
    left_[level][block] = std::move(b);
    right_[level][block] = std::move(c);
  }

  void set_block_symmetric(Index level, Index block, const Matrix& b, Vector signs) {
    require(kind_ == Kind::symmetric, Errc::unsupported_kind,
            "set_block_symmetric applies to symmetric matrices only");
    require(signs.size() == b.cols(), Errc::shape_mismatch,
            "sign vector length must match factor columns");
    Matrix c = b * signs.asDiagonal();
    check_block_shapes(level, block, b, c);
    left_[level][block] = b;
    right_[level][block] = std::move(c);
    signs_[level][block] = std::move(signs);
  }

  void set_block_psd(Index level, Index block, const Matrix& b) {
    require(kind_ == Kind::psd, Errc::unsupported_kind,
            "set_block_psd applies to psd matrices only");
    check_block_shapes(level, block, b, b);
    left_[level][block] = b;
    right_[level][block] = b;
  }

  /// Dispatches to the kind-appropriate setter. For symmetric kind, `signs`
  /// must be provided; for general kind, `c` must be provided.
  void set_block_auto(Index level, Index block, const Matrix& b, const Matrix& c,
                      const Vector& signs) {
    switch (kind_) {
      case Kind::general: set_block(level, block, b, c); break;
      case Kind::symmetric: set_block_symmetric(level, block, b, signs); break;
      case Kind::psd: set_block_psd(level, block, b); break;
    }
  }

  void set_zero() { allocate_zero_factors(); }

  /// Changes the rank of one level in place. Existing factor columns are
  /// kept up to the new rank; added columns are zero (signs default to +1).
  void resize_level_rank(Index level, Index new_rank) {
    require(new_rank >= 0, Errc::invalid_argument, "rank must be nonnegative");
    const Index p = partition_.num_blocks(level);
    for (Index k = 0; k < p; ++k) {
      resize_cols(left_[level][k], new_rank);
      resize_cols(right_[level][k], new_rank);
      if (kind_ == Kind::symmetric) {
        Vector s = Vector::Ones(new_rank);
        s.head(std::min(new_rank, signs_[level][k].size())) =
            signs_[level][k].head(std::min(new_rank, signs_[level][k].size()));
        signs_[level][k] = std::move(s);
      }
    }
    alloc_.ranks[level] = new_rank;
  }

  bool operator==(const MlrMatrix& other) const {
    if (!(partition_ == other.partition_) || !(alloc_ == other.alloc_) ||
        kind_ != other.kind_)
      return false;
    for (Index l = 0; l < num_levels(); ++l)
      for (Index k = 0; k < partition_.num_blocks(l); ++k) {
        if (left_[l][k] != other.left_[l][k] || right_[l][k] != other.right_[l][k])
          return false;
        if (kind_ == Kind::symmetric && signs_[l][k] != other.signs_[l][k])
          return false;
      }
    return true;
  }

 private:
  void check_block_shapes(Index level, Index block, const Matrix& b, const Matrix& c) const {
    require(b.rows() == partition_.row_size(level, block) &&
                c.rows() == partition_.col_size(level, block) &&
                b.cols() == alloc_.ranks[level] && c.cols() == alloc_.ranks[level],
            Errc::shape_mismatch,
            "factor shapes do not match block (" + std::to_string(level + 1) + "," +
                std::to_string(block + 1) + ")");
  }

  static void resize_cols(Matrix& f, Index new_cols) {
    const Index keep = std::min(new_cols, f.cols());
    Matrix g = Matrix::Zero(f.rows(), new_cols);
    g.leftCols(keep) = f.leftCols(keep);
    f = std::move(g);
  }

  void allocate_zero_factors() {
    const Index L = num_levels();
    left_.assign(static_cast<size_t>(L), {});
    right_.assign(static_cast<size_t>(L), {});
    signs_.assign(static_cast<size_t>(L), {});
    for (Index l = 0; l < L; ++l) {
      const Index p = partition_.num_blocks(l);
      const Index r = alloc_.ranks.empty() ? 0 : alloc_.ranks[l];
      left_[l].resize(static_cast<size_t>(p));
      right_[l].resize(static_cast<size_t>(p));
      signs_[l].resize(static_cast<size_t>(p));
      for (Index k = 0; k < p; ++k) {
        left_[l][k] = Matrix::Zero(partition_.row_size(l, k), r);
        right_[l][k] = Matrix::Zero(partition_.col_size(l, k), r);
        signs_[l][k] = Vector::Ones(r);
      }
    }
  }

  HierPartition partition_;
  RankAllocation alloc_;
  Kind kind_ = Kind::general;
  // Indexed [level][block]; signs_ is meaningful for symmetric kind only.
  std::vector<std::vector<Matrix>> left_, right_;
  std::vector<std::vector<Vector>> signs_;
};

/// Checks every structural invariant; throws naming the first violation.
inline void validate(const MlrMatrix& a) {
  const HierPartition& part = a.partition();
  part.validate();
  require(a.alloc().levels() == part.num_levels(), Errc::shape_mismatch,
          "rank allocation length differs from the number of levels");
  for (Index r : a.alloc().ranks)
    require(r >= 0, Errc::shape_mismatch, "negative rank in allocation");
  for (Index l = 0; l < part.num_levels(); ++l) {
    for (Index k = 0; k < part.num_blocks(l); ++k) {
      const Matrix& b = a.left(l, k);
      const Matrix& c = a.right(l, k);
      require(b.rows() == part.row_size(l, k) && c.rows() == part.col_size(l, k) &&
                  b.cols() == a.alloc().ranks[l] && c.cols() == a.alloc().ranks[l],
              Errc::shape_mismatch,
              "factor shapes do not match block (" + std::to_string(l + 1) + "," +
                  std::to_string(k + 1) + ")");
    }
  }
  if (a.kind() == Kind::symmetric || a.kind() == Kind::psd) {
    require(part.rows() == part.cols(), Errc::symmetry_violation,
            "symmetric MLR matrices must be square");
    require(part.row_perm() == part.col_perm(), Errc::symmetry_violation,
            "symmetric MLR matrices need identical row and column permutations");
    for (Index l = 0; l < part.num_levels(); ++l) {
      require(part.row_sizes(l) == part.col_sizes(l), Errc::symmetry_violation,
              "symmetric MLR matrices need identical row and column blocks");
      for (Index k = 0; k < part.num_blocks(l); ++k) {
        if (a.kind() == Kind::psd) {
          require(a.left(l, k) == a.right(l, k), Errc::symmetry_violation,
                  "psd blocks require C = B");
        } else {
          const Vector& s = a.signs(l, k);
          require(s.size() == a.alloc().ranks[l], Errc::symmetry_violation,
                  "sign vector length mismatch");
          for (Index t = 0; t < s.size(); ++t)
            require(s[t] == 1.0 || s[t] == -1.0, Errc::symmetry_violation,
                    "sign entries must be +/-1");
          Matrix bs = a.left(l, k) * s.asDiagonal();
          require(bs == a.right(l, k), Errc::symmetry_violation,
                  "symmetric blocks require C = B * diag(signs)");
        }
      }
    }
  }
}

/// Gathers A into contiguous order: result(i, j) = A(row_perm[i], col_perm[j]).
inline Matrix permute_to_contiguous(const Matrix& a, const HierPartition& part) {
  require(a.rows() == part.rows() && a.cols() == part.cols(), Errc::dimension_mismatch,
          "matrix dimensions do not match the partition");
  const auto& rp = part.row_perm();
  const auto& cp = part.col_perm();
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out(i, j) = a(rp[i], cp[j]);
  return out;
}

/// Inverse of permute_to_contiguous: result(row_perm[i], col_perm[j]) = M(i, j).
inline Matrix scatter_from_contiguous(const Matrix& m, const HierPartition& part) {
  require(m.rows() == part.rows() && m.cols() == part.cols(), Errc::dimension_mismatch,
          "matrix dimensions do not match the partition");
  const auto& rp = part.row_perm();
  const auto& cp = part.col_perm();
  Matrix out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out(rp[i], cp[j]) = m(i, j);
  return out;
}

/// Adds the level-l block-diagonal value to `acc` (contiguous indexing).
/// Fast path used by the fitting loops.
inline void add_level_value(Matrix& acc, const MlrMatrix& a, Index level) {
  const HierPartition& part = a.partition();
  if (a.alloc().ranks[level] == 0) return;
  for (Index k = 0; k < part.num_blocks(level); ++k) {
    acc.block(part.row_offset(level, k), part.col_offset(level, k),
              part.row_size(level, k), part.col_size(level, k))
        .noalias() += a.left(level, k) * a.right(level, k).transpose();
  }
}

/// Value of the contiguous form, sum_l blkdiag_k(B_{l,k} C_{l,k}^T).
/// Accumulation order: levels ascending, blocks ascending.
inline Matrix eval_contiguous(const MlrMatrix& a) {
  Matrix acc = Matrix::Zero(a.rows(), a.cols());
  for (Index l = 0; l < a.num_levels(); ++l) add_level_value(acc, a, l);
  return acc;
}

namespace detail {

// Entry-wise block product, accumulation over factor columns in ascending
// order. Keeps to_dense(transpose(a)) exactly equal to to_dense(a)^T.
inline void add_block_product_exact(Matrix& acc, Index i0, Index j0, const Matrix& b,
                                    const Matrix& c) {
  const Index rows = b.rows(), cols = c.rows(), r = b.cols();
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      double s = 0.0;
      for (Index t = 0; t < r; ++t) s += b(i, t) * c(j, t);
      acc(i0 + i, j0 + j) += s;
    }
}

}  // namespace detail

/// Materializes the dense value at the original (unpermuted) indices.
inline Matrix to_dense(const MlrMatrix& a) {
  const HierPartition& part = a.partition();
  Matrix acc = Matrix::Zero(a.rows(), a.cols());
  for (Index l = 0; l < a.num_levels(); ++l) {
    if (a.alloc().ranks[l] == 0) continue;
    for (Index k = 0; k < part.num_blocks(l); ++k)
      detail::add_block_product_exact(acc, part.row_offset(l, k), part.col_offset(l, k),
                                      a.left(l, k), a.right(l, k));
  }
  return scatter_from_contiguous(acc, part);
}

/// y = A x using the block factored form: gather x by the column permutation,
/// z = C^T x and B z per block, sum levels, scatter by the row permutation.
inline Vector matvec(const MlrMatrix& a, const Vector& x) {
  require(x.size() == a.cols(), Errc::dimension_mismatch,
          "matvec: vector length does not match columns");
  const HierPartition& part = a.partition();
  const auto& rp = part.row_perm();
  const auto& cp = part.col_perm();
  Vector xc(x.size());
  for (Index j = 0; j < x.size(); ++j) xc[j] = x[cp[j]];
  Vector yc = Vector::Zero(a.rows());
  for (Index l = 0; l < a.num_levels(); ++l) {
    if (a.alloc().ranks[l] == 0) continue;
    for (Index k = 0; k < part.num_blocks(l); ++k) {
      Vector z = a.right(l, k).transpose() *
                 xc.segment(part.col_offset(l, k), part.col_size(l, k));
      yc.segment(part.row_offset(l, k), part.row_size(l, k)).noalias() +=
          a.left(l, k) * z;
    }
  }
  Vector y(a.rows());
  for (Index i = 0; i < a.rows(); ++i) y[rp[i]] = yc[i];
  return y;
}

/// Transposed representation: swaps permutations, factors and dimensions.
inline MlrMatrix transpose(const MlrMatrix& a) {
  const HierPartition& p = a.partition();
  std::vector<std::vector<Index>> rb, cb;
  for (Index l = 0; l < p.num_levels(); ++l) {
    rb.push_back(p.col_sizes(l));
    cb.push_back(p.row_sizes(l));
  }
  HierPartition tp(std::move(rb), std::move(cb), p.col_perm(), p.row_perm());
  MlrMatrix at(std::move(tp), a.alloc(), a.kind());
  for (Index l = 0; l < a.num_levels(); ++l)
    for (Index k = 0; k < p.num_blocks(l); ++k) {
      switch (a.kind()) {
        case Kind::general:
          at.set_block(l, k, a.right(l, k), a.left(l, k));
          break;
        case Kind::symmetric: {
          // (B S B^T)^T = B S B^T: representation, incl. signs, carries over.
          at.set_block_symmetric(l, k, a.left(l, k), a.signs(l, k));
          break;
        }
        case Kind::psd:
          at.set_block_psd(l, k, a.left(l, k));
          break;
      }
    }
  return at;
}

/// y = A^T x.
inline Vector matvec_adjoint(const MlrMatrix& a, const Vector& y) {
  require(y.size() == a.rows(), Errc::dimension_mismatch,
          "matvec_adjoint: vector length does not match rows");
  const HierPartition& part = a.partition();
  const auto& rp = part.row_perm();
  const auto& cp = part.col_perm();
  Vector yc(y.size());
  for (Index i = 0; i < y.size(); ++i) yc[i] = y[rp[i]];
  Vector xc = Vector::Zero(a.cols());
  for (Index l = 0; l < a.num_levels(); ++l) {
    if (a.alloc().ranks[l] == 0) continue;
    for (Index k = 0; k < part.num_blocks(l); ++k) {
      Vector z = a.left(l, k).transpose() *
                 yc.segment(part.row_offset(l, k), part.row_size(l, k));
      xc.segment(part.col_offset(l, k), part.col_size(l, k)).noalias() +=
          a.right(l, k) * z;
    }
  }
  Vector x(a.cols());
  for (Index j = 0; j < a.cols(); ++j) x[cp[j]] = xc[j];
  return x;
}

/// Number of stored real coefficients: (m+n) r in general, m r for
/// symmetric/psd (signs not counted).
inline Index storage_count(const MlrMatrix& a) {
  const Index r = a.mlr_rank();
  if (a.kind() == Kind::general) return (a.rows() + a.cols()) * r;
  return a.rows() * r;
}

/// Exact multiply+add count of one matvec in the block factored form.
/// Permutation gathers and scatters cost no arithmetic.
inline std::int64_t matvec_op_count(const MlrMatrix& a) {
  const HierPartition& part = a.partition();
  std::int64_t ops = 0;
  for (Index l = 0; l < a.num_levels(); ++l) {
    const Index r = a.alloc().ranks[l];
    if (r == 0) continue;
    for (Index k = 0; k < part.num_blocks(l); ++k) {
      const std::int64_t mk = part.row_size(l, k);
      const std::int64_t nk = part.col_size(l, k);
      ops += nk * r + (nk - 1) * r;  // z = C^T x
      ops += mk * r + mk * (r - 1);  // w = B z
      ops += mk;                     // y += w
    }
  }
  return ops;
}

/// Factor form descriptor: A = P * Btilde * Ctilde^T * Q^T where Btilde and
/// Ctilde consist of L horizontally concatenated block-diagonal column
/// groups, one per level, with s = sum_l p_l r_l total columns.
struct FactorForm {
  struct Entry {
    Index level, block;
    Index col_start;        // first column of this block's columns in Btilde/Ctilde
    Index row_start_left;   // first row of B_{l,k} within Btilde
    Index row_start_right;  // first row of C_{l,k} within Ctilde
    Index rank;
  };

  Index total_cols = 0;  // s
  std::vector<Entry> entries;
  const MlrMatrix* source = nullptr;

  Matrix dense_left() const {
    Matrix b = Matrix::Zero(source->rows(), total_cols);
    for (const auto& e : entries)
      b.block(e.row_start_left, e.col_start, source->left(e.level, e.block).rows(),
              e.rank) = source->left(e.level, e.block);
    return b;
  }
  Matrix dense_right() const {
    Matrix c = Matrix::Zero(source->cols(), total_cols);
    for (const auto& e : entries)
      c.block(e.row_start_right, e.col_start, source->right(e.level, e.block).rows(),
              e.rank) = source->right(e.level, e.block);
    return c;
  }
};

inline FactorForm factor_form(const MlrMatrix& a) {
  FactorForm f;
  f.source = &a;
  const HierPartition& part = a.partition();
  Index col = 0;
  for (Index l = 0; l < a.num_levels(); ++l) {
    const Index r = a.alloc().ranks[l];
    for (Index k = 0; k < part.num_blocks(l); ++k) {
      f.entries.push_back({l, k, col, part.row_offset(l, k), part.col_offset(l, k), r});
      col += r;
    }
  }
  f.total_cols = col;
  return f;
}

}  // namespace mlrfit
