#pragma once

#include <memory>
#include <vector>

#include "ctf/transform/lifting.hpp"

namespace ctf::ising {

/// Number of single-block coarsening steps available for an n x n lattice:
/// (n/3)^2 blocks into the n/3 grid, then (n/9)^2 more when n is divisible by 9.
int max_coarsening_steps(int n);

/// Fully fine partial lattice view of an n x n spin matrix.
PartialCoarseLattice to_partial(const IntMatrix& spins);

/// Whether the cell (r, c) of `scale` currently carries a spin.
bool resolved(const PartialCoarseLattice& l, int scale, int r, int c);

/// Modal spin of nine +-1 spins.
int block_mode(const std::vector<int>& nine);

/// Coarsens the next block in raster order. Accepts a plain spin matrix or a
/// partial lattice. Throws FullyCoarsened or NotDivisible.
PartialCoarseLattice majority_coarsen_step(const PartialCoarseLattice& l);

/// Every 3x3 block of +-1 spins whose mode is `spin` (256 of them).
const std::vector<std::vector<int>>& majority_refine(int spin);

/// Majority-rule scheme over spin matrices and partial lattices. Its class
/// score assumes the uniform spin prior: each resolved cell, at any scale,
/// carries probability 1/2 independently.
CoarseningScheme majority_scheme();

/// Uniform distribution over n x n spin matrices. Enumerable for n <= 4.
Distribution uniform_spins(int n);

/// J * sum over neighbouring resolved cells of s_i s_j. A coarse cell pairs
/// once with each resolved cell across its boundary, at whatever scale.
/// Throws UnresolvedLattice.
double energy(const Value& lattice, double coupling);

/// Samples a spin lattice and factors on J * energy with J = 1 / temperature.
/// The energy is polymorphic, so it is not lifted.
LiftableModel ising_model(int n, double temperature, std::shared_ptr<const CoarseningScheme> scheme);

}  // namespace ctf::ising
