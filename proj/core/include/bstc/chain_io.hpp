#pragma once

#include <filesystem>
#include <vector>

#include "bstc/sampler.hpp"

namespace bstc {

/// Writes a chain directory:
///   meta            key=value: layout, dimensions, acceptance, config echo
///   units.csv       unit ids in data order
///   times.csv       period labels
///   scalars.csv     draw,chain,sigma2,tau2,rho,alpha,k
///   allocations.csv one column per unit, 1-based cluster labels
///   xi.csv          one column per unit
///   beta.csv        columns <unit>:<coefficient index>, unit-major
///   w.csv           columns <unit>@<time>, unit-major
///   loglik.csv      one column per unit
/// Several chains are stacked in order; scalars.csv records the chain.
void write_chain_output(const std::filesystem::path& dir, const std::vector<ChainOutput>& chains);
void write_chain_output(const std::filesystem::path& dir, const ChainOutput& chain);

/// Reads a directory written above. Stacked chains come back merged; doubles
/// round-trip exactly.
ChainOutput read_chain_output(const std::filesystem::path& dir);

}  // namespace bstc
