#include "ppdesign/alphabet.hpp"

#include <array>

namespace ppdesign {

namespace {

struct ThreeLetterEntry {
    const char* code;
    char letter;
};

// Canonical residues only; anything else is tagged unknown by the parser.
constexpr std::array<ThreeLetterEntry, 20> kThreeLetter = {{
    {"ALA", 'A'}, {"ARG", 'R'}, {"ASN", 'N'}, {"ASP", 'D'}, {"CYS", 'C'},
    {"GLN", 'Q'}, {"GLU", 'E'}, {"GLY", 'G'}, {"HIS", 'H'}, {"ILE", 'I'},
    {"LEU", 'L'}, {"LYS", 'K'}, {"MET", 'M'}, {"PHE", 'F'}, {"PRO", 'P'},
    {"SER", 'S'}, {"THR", 'T'}, {"TRP", 'W'}, {"TYR", 'Y'}, {"VAL", 'V'},
}};

}  // namespace

int aa_index(char one_letter) {
    for (int i = 0; i < kAlphabetSize; ++i) {
        if (kAlphabet[static_cast<size_t>(i)] == one_letter) return i;
    }
    return -1;
}

char aa_letter(int index) {
    if (index < 0 || index >= kAlphabetSize) return 'X';
    return kAlphabet[static_cast<size_t>(index)];
}

int aa_index_from_three(std::string_view three_letter) {
    for (const auto& entry : kThreeLetter) {
        if (three_letter == entry.code) return aa_index(entry.letter);
    }
    return -1;
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t alphabet_hash() { return fnv1a64(kAlphabet); }

bool is_canonical_sequence(std::string_view seq) {
    for (char c : seq) {
        if (aa_index(c) < 0) return false;
    }
    return true;
}

}  // namespace ppdesign
