// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The irsce Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <string>

namespace irsce
{

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr cdouble kJ{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

/// Largest entry modulus of C - C^H, relative to the largest entry modulus of C (floored at 1).
inline double hermitian_defect(const CMatrix& c)
{
    if (c.size() == 0)
        return 0.0;
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    return (c - c.adjoint()).cwiseAbs().maxCoeff() / scale;
}

/// Principal square root of a Hermitian PSD matrix through its eigendecomposition.
///
/// Eigenvalues in [-1e-12 * lambda_max, 0) are rounding noise and are clamped to zero;
/// anything more negative means the input is not PSD.
inline CMatrix hermitian_sqrt(const CMatrix& c)
{
    require(c.rows() == c.cols(), ErrorKind::invalid_matrix, "hermitian_sqrt: matrix is not square");
    require(hermitian_defect(c) <= 1e-10, ErrorKind::invalid_matrix, "hermitian_sqrt: matrix is not Hermitian");
    if (c.size() == 0)
        return c;

    const CMatrix sym = 0.5 * (c + c.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(sym);
    require(eig.info() == Eigen::Success, ErrorKind::invalid_matrix, "hermitian_sqrt: eigendecomposition failed");

    RVector values = eig.eigenvalues();
    const double top = std::max(1.0, values.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < values.size(); ++i)
    {
        if (values(i) < -1e-12 * top)
            fail(ErrorKind::invalid_matrix, "hermitian_sqrt: matrix has a negative eigenvalue");
        values(i) = std::sqrt(std::max(values(i), 0.0));
    }
    const CMatrix& vectors = eig.eigenvectors();
    CMatrix root = vectors * values.cast<cdouble>().asDiagonal() * vectors.adjoint();
    return 0.5 * (root + root.adjoint());
}

/// Moore-Penrose pseudo-inverse via SVD. Singular values below 1e-10 * sigma_max are treated as zero.
/// Throws degenerate_channel when the numerical rank is below `required_rank`.
inline CMatrix pseudo_inverse(const CMatrix& b, Eigen::Index required_rank)
{
    if (b.size() == 0)
        return CMatrix::Zero(b.cols(), b.rows());

    Eigen::JacobiSVD<CMatrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& s = svd.singularValues();
    const double cutoff = 1e-10 * s(0);
    Eigen::Index rank = 0;
    RVector inv = RVector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
    {
        if (s(i) > cutoff && s(i) > 0.0)
        {
            inv(i) = 1.0 / s(i);
            ++rank;
        }
    }
    if (rank < required_rank)
        fail(ErrorKind::degenerate_channel,
             "pseudo_inverse: numerical rank " + std::to_string(rank) + " below required " +
                 std::to_string(required_rank));
    return svd.matrixV() * inv.cast<cdouble>().asDiagonal() * svd.matrixU().adjoint();
}

/// Numerical rank with the same relative cutoff as pseudo_inverse.
inline Eigen::Index numerical_rank(const CMatrix& b, double relative_cutoff = 1e-10)
{
    if (b.size() == 0)
        return 0;
    Eigen::JacobiSVD<CMatrix> svd(b);
    const RVector& s = svd.singularValues();
    const double cutoff = relative_cutoff * s(0);
    return std::count_if(s.data(), s.data() + s.size(), [&](double v) { return v > cutoff && v > 0.0; });
}

/// Cholesky factor of a Hermitian positive-definite matrix; throws conditioning on failure.
inline Eigen::LLT<CMatrix> hpd_factor(const CMatrix& a, const char* what)
{
    Eigen::LLT<CMatrix> llt(0.5 * (a + a.adjoint()));
    if (llt.info() != Eigen::Success)
        fail(ErrorKind::conditioning, std::string(what) + ": matrix is not Hermitian positive definite");
    return llt;
}

inline CMatrix hpd_inverse(const CMatrix& a, const char* what)
{
    auto llt = hpd_factor(a, what);
    CMatrix inv = llt.solve(CMatrix::Identity(a.rows(), a.cols()));
    return 0.5 * (inv + inv.adjoint());
}

} // namespace irsce
