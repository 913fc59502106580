#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ppdesign {

/// The 20 canonical amino acid one-letter codes in alphabetical order.
/// Index <-> letter mappings below are fixed; the hash pins the ordering
/// in checkpoints so mismatched builds refuse to load each other's weights.
inline constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr int kAlphabetSize = 20;

/// Index of a one-letter code, or -1 if not one of the 20 canonical codes.
int aa_index(char one_letter);

/// One-letter code for an index in [0, 20).
char aa_letter(int index);

/// Index for a 3-letter residue code (e.g. "ALA"), or -1 if unknown.
int aa_index_from_three(std::string_view three_letter);

/// FNV-1a 64-bit hash of an arbitrary string.
std::uint64_t fnv1a64(std::string_view text);

/// Hash of the alphabet table itself.
std::uint64_t alphabet_hash();

/// True when every character of `seq` is a canonical one-letter code.
bool is_canonical_sequence(std::string_view seq);

}  // namespace ppdesign
