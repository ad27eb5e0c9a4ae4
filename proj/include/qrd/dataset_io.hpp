#pragma once

#include "qrd/core.hpp"

#include <iosfwd>
#include <string>
#include <utility>

namespace qrd {

// Binary shot-record container.
//
// Layout (all integers and floats little-endian):
//   magic "QRDD" | version u32 | num_qubits u16 | num_samples u32 |
//   sample_period_ns f32 | shot_count u64 | manifest_len u32 | manifest UTF-8 |
//   then per shot: label u32 | 2*num_samples f32 (interleaved I, Q).
//
// Samples are stored as f32 and widened to f64 in memory.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

void write_dataset(const ShotDataset& ds, std::ostream& os);
void write_dataset_file(const ShotDataset& ds, const std::string& path);
ShotDataset read_dataset(std::istream& is);
ShotDataset read_dataset_file(const std::string& path);

// Deterministic per-label split: exactly train_per_label shots of every label
// go to the train set, the rest to test. Shot selection is a seeded shuffle,
// output order preserves the input order within each part.
std::pair<ShotDataset, ShotDataset> split_train_test(const ShotDataset& ds,
                                                     std::uint64_t train_per_label,
                                                     std::uint64_t seed);

// Keeps only shots whose label bits outside `qubits` are all zero and
// re-indexes labels onto the subset (qubits listed low bit first).
ShotDataset restrict_to_subset(const ShotDataset& ds, const std::vector<std::uint16_t>& qubits);

// Drops samples past num_samples (front-aligned truncation).
ShotDataset truncate_samples(const ShotDataset& ds, std::uint32_t num_samples);

// Deterministic stratified subsample: per_label shots of every label.
ShotDataset subsample_per_label(const ShotDataset& ds, std::uint64_t per_label, std::uint64_t seed);

}  // namespace qrd
