#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qkws/tensor.hpp"

namespace qkws {

// One clip: mono samples in [-1, 1), label index into the split's
// label_names, path relative to the dataset root.
struct Utterance {
    std::vector<double> samples;
    int sample_rate = 0;
    int label = -1;
    std::string source_path;
};

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::vector<std::string> label_names;
};

// Directory scan result, before any audio is decoded. Paths are sorted and
// relative to the root with forward slashes, so splits and manifests are
// machine-independent.
struct DatasetScan {
    std::vector<std::string> label_names;
    std::vector<std::string> rel_paths;
    std::vector<int> labels;
    std::optional<std::set<std::string>> testing_list;
};

struct Dataset {
    std::vector<Utterance> utterances;
    DatasetSplit split;

    std::size_t n_classes() const { return split.label_names.size(); }
};

// 16-bit PCM mono WAV only; anything else is a FormatError naming the path.
// Samples scaled by 1/32768. The caller assigns the label.
Utterance load_wav(const std::filesystem::path& path);

void write_wav_pcm16(const std::filesystem::path& path,
                     std::span<const double> samples, int sample_rate);

// 63-tap Hamming-windowed sinc low-pass (cutoff 3.6 kHz) then decimation
// by 2. Output length is ceil(input / 2).
Utterance resample_16k_to_8k(const Utterance& u);

// Folder-per-label layout; folders starting with '_' are skipped. Throws
// DatasetError with fewer than two usable classes.
DatasetScan scan_dataset(const std::filesystem::path& root);

// Test set from testing_list.txt when present, else a seeded draw of
// min(6500, n/5) utterances; the remaining development data splits 90/10
// train/validation under a seeded shuffle.
DatasetSplit split_dataset(const DatasetScan& scan, std::uint64_t seed);

// scan + split + decode + resample-to-8k. Decoding runs in parallel; the
// result is index-ordered and deterministic.
Dataset load_dataset(const std::filesystem::path& root, std::uint64_t seed);

struct Batch {
    Tensor waveforms; // [B, 1, L_max], zero right-padded per batch
    std::vector<int> labels;
};

// Seeded shuffle per (seed, epoch) when shuffle is true; the final partial
// batch is kept.
std::vector<Batch> make_batches(const Dataset& data,
                                std::span<const std::size_t> part,
                                std::size_t batch_size, std::uint64_t seed,
                                std::uint64_t epoch, bool shuffle);

// One JSON record per utterance (path, label, split, length), sorted by
// path. Byte-identical across reruns of the same dataset and seed.
void write_manifest(const Dataset& data, std::ostream& out);

// Bundled smoke-data generator: one constant-frequency tone per class with
// random amplitude and phase plus light white noise, written as 8 kHz PCM16
// WAVs under tone folders, with every fifth clip listed in testing_list.txt.
void generate_tone_dataset(const std::filesystem::path& root, int n_classes,
                           int clips_per_class, double seconds,
                           int sample_rate, std::uint64_t seed);

} // namespace qkws
