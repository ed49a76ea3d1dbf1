#include "qkws/audiodata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "qkws/errors.hpp"
#include "qkws/parallel.hpp"
#include "qkws/rng.hpp"
#include "qkws/simcore.hpp" // kPi

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace qkws {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] |
                                      (static_cast<std::uint16_t>(p[1]) << 8));
}

[[noreturn]] void bad_wav(const fs::path& path, const std::string& why) {
    throw FormatError("load_wav: " + path.string() + ": " + why);
}

// 63-tap Hamming-windowed sinc, cutoff 3.6 kHz at a 16 kHz input rate,
// normalized to unit DC gain.
const std::array<double, 63>& antialias_taps() {
    static const std::array<double, 63> taps = [] {
        std::array<double, 63> h{};
        const double cutoff = 3600.0 / 16000.0; // cycles per sample
        double sum = 0.0;
        for (int k = 0; k < 63; ++k) {
            const int m = k - 31;
            const double sinc =
                (m == 0) ? 2.0 * cutoff
                         : std::sin(2.0 * kPi * cutoff * m) / (kPi * m);
            const double window =
                0.54 - 0.46 * std::cos(2.0 * kPi * k / 62.0);
            h[k] = sinc * window;
            sum += h[k];
        }
        for (auto& v : h) v /= sum;
        return h;
    }();
    return taps;
}

} // namespace

Utterance load_wav(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) bad_wav(path, "cannot open");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 44) bad_wav(path, "truncated header");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        bad_wav(path, "not a RIFF/WAVE file");
    }

    std::uint16_t channels = 0, bits = 0, format = 0;
    std::uint32_t rate = 0;
    const unsigned char* data_ptr = nullptr;
    std::size_t data_len = 0;
    bool have_fmt = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t chunk_len = read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_len > bytes.size()) bad_wav(path, "chunk overruns file");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_len < 16) bad_wav(path, "fmt chunk too short");
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_ptr = bytes.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1); // chunks are word-aligned
    }

    if (!have_fmt || data_ptr == nullptr) bad_wav(path, "missing fmt or data chunk");
    if (format != 1) bad_wav(path, "only PCM encoding is supported");
    if (channels != 1) bad_wav(path, "only mono is supported");
    if (bits != 16) bad_wav(path, "only 16-bit samples are supported");

    Utterance u;
    u.sample_rate = static_cast<int>(rate);
    u.source_path = path.string();
    const std::size_t n = data_len / 2;
    u.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::int16_t v = static_cast<std::int16_t>(
            read_u16(data_ptr + 2 * i));
        u.samples[i] = static_cast<double>(v) / 32768.0;
    }
    return u;
}

void write_wav_pcm16(const fs::path& path, std::span<const double> samples,
                     int sample_rate) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("write_wav_pcm16: cannot open " + path.string());

    auto put_u32 = [&](std::uint32_t v) {
        const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                           static_cast<char>(v >> 16),
                           static_cast<char>(v >> 24)};
        out.write(b, 4);
    };
    auto put_u16 = [&](std::uint16_t v) {
        const char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
        out.write(b, 2);
    };

    const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    put_u32(36 + data_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1); // PCM
    put_u16(1); // mono
    put_u32(static_cast<std::uint32_t>(sample_rate));
    put_u32(static_cast<std::uint32_t>(sample_rate) * 2);
    put_u16(2);
    put_u16(16);
    out.write("data", 4);
    put_u32(data_len);
    for (double s : samples) {
        const double clamped = std::clamp(s, -1.0, 32767.0 / 32768.0);
        const auto v = static_cast<std::int16_t>(std::lround(clamped * 32768.0));
        put_u16(static_cast<std::uint16_t>(v));
    }
}

Utterance resample_16k_to_8k(const Utterance& u) {
    if (u.sample_rate != 16000) {
        throw std::invalid_argument("resample_16k_to_8k: input rate must be 16000, got " +
                                    std::to_string(u.sample_rate));
    }
    const auto& h = antialias_taps();
    const std::size_t n = u.samples.size();
    const std::size_t out_n = (n + 1) / 2;

    Utterance out;
    out.sample_rate = 8000;
    out.label = u.label;
    out.source_path = u.source_path;
    out.samples.resize(out_n);
    for (std::size_t m = 0; m < out_n; ++m) {
        const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(2 * m);
        double acc = 0.0;
        for (int k = 0; k < 63; ++k) {
            const std::ptrdiff_t idx = center + (k - 31);
            if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(n)) {
                acc += h[k] * u.samples[static_cast<std::size_t>(idx)];
            }
        }
        out.samples[m] = acc;
    }
    return out;
}

DatasetScan scan_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) {
        throw DatasetError("scan_dataset: not a directory: " + root.string());
    }
    DatasetScan scan;
    std::vector<std::string> folders;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (name.empty() || name[0] == '_' || name[0] == '.') continue;
        folders.push_back(name);
    }
    std::sort(folders.begin(), folders.end());

    for (std::size_t label = 0; label < folders.size(); ++label) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(root / folders[label])) {
            if (!entry.is_regular_file()) continue;
            if (entry.path().extension() != ".wav") continue;
            files.push_back(folders[label] + "/" +
                            entry.path().filename().string());
        }
        if (files.empty()) continue;
        std::sort(files.begin(), files.end());
        for (auto& f : files) {
            scan.rel_paths.push_back(std::move(f));
            scan.labels.push_back(static_cast<int>(scan.label_names.size()));
        }
        scan.label_names.push_back(folders[label]);
    }

    if (scan.label_names.size() < 2) {
        throw DatasetError("scan_dataset: need at least 2 class folders with .wav files under " +
                           root.string());
    }

    const fs::path listing = root / "testing_list.txt";
    if (fs::exists(listing)) {
        std::set<std::string> listed;
        std::ifstream in(listing);
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
                line.pop_back();
            }
            if (!line.empty()) listed.insert(line);
        }
        scan.testing_list = std::move(listed);
    }
    return scan;
}

DatasetSplit split_dataset(const DatasetScan& scan, std::uint64_t seed) {
    const std::size_t n = scan.rel_paths.size();
    DatasetSplit split;
    split.label_names = scan.label_names;

    std::vector<std::size_t> development;
    if (scan.testing_list) {
        for (std::size_t i = 0; i < n; ++i) {
            if (scan.testing_list->count(scan.rel_paths[i])) {
                split.test.push_back(i);
            } else {
                development.push_back(i);
            }
        }
        rng::Engine engine(seed);
        rng::shuffle(development, engine);
    } else {
        // No provided list: hold out a seeded draw, capped by dataset size.
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng::Engine engine(seed);
        rng::shuffle(order, engine);
        const std::size_t test_n = std::min<std::size_t>(6500, n / 5);
        split.test.assign(order.begin(), order.begin() + test_n);
        development.assign(order.begin() + test_n, order.end());
    }

    if (development.size() < 2) {
        throw DatasetError("split_dataset: too few development utterances");
    }
    const auto train_n = static_cast<std::size_t>(
        std::llround(0.9 * static_cast<double>(development.size())));
    split.train.assign(development.begin(), development.begin() + train_n);
    split.validation.assign(development.begin() + train_n, development.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Dataset load_dataset(const fs::path& root, std::uint64_t seed) {
    const DatasetScan scan = scan_dataset(root);
    Dataset data;
    data.split = split_dataset(scan, seed);
    data.utterances.resize(scan.rel_paths.size());
    parallel_for(scan.rel_paths.size(), [&](std::size_t i) {
        Utterance u = load_wav(root / scan.rel_paths[i]);
        u.label = scan.labels[i];
        u.source_path = scan.rel_paths[i];
        if (u.sample_rate == 16000) {
            u = resample_16k_to_8k(u);
        } else if (u.sample_rate != 8000) {
            throw FormatError("load_dataset: unsupported sample rate " +
                              std::to_string(u.sample_rate) + " in " +
                              scan.rel_paths[i]);
        }
        data.utterances[i] = std::move(u);
    });
    return data;
}

std::vector<Batch> make_batches(const Dataset& data,
                                std::span<const std::size_t> part,
                                std::size_t batch_size, std::uint64_t seed,
                                std::uint64_t epoch, bool shuffle) {
    std::vector<std::size_t> order(part.begin(), part.end());
    if (shuffle) {
        rng::Engine engine(rng::derive(seed, epoch));
        rng::shuffle(order, engine);
    }

    std::vector<Batch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t stop = std::min(start + batch_size, order.size());
        const std::size_t b = stop - start;
        std::size_t max_len = 1;
        for (std::size_t i = start; i < stop; ++i) {
            max_len = std::max(max_len, data.utterances[order[i]].samples.size());
        }
        Batch batch;
        batch.waveforms = Tensor::zeros({b, 1, max_len});
        batch.labels.resize(b);
        for (std::size_t i = 0; i < b; ++i) {
            const Utterance& u = data.utterances[order[start + i]];
            std::copy(u.samples.begin(), u.samples.end(),
                      batch.waveforms.data.data() + i * max_len);
            batch.labels[i] = u.label;
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

void write_manifest(const Dataset& data, std::ostream& out) {
    std::vector<std::size_t> order(data.utterances.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::string> split_of(data.utterances.size(), "train");
    for (auto i : data.split.validation) split_of[i] = "validation";
    for (auto i : data.split.test) split_of[i] = "test";
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.utterances[a].source_path < data.utterances[b].source_path;
    });
    for (auto i : order) {
        const Utterance& u = data.utterances[i];
        nlohmann::ordered_json record;
        record["path"] = u.source_path;
        record["label"] = data.split.label_names[static_cast<std::size_t>(u.label)];
        record["split"] = split_of[i];
        record["length"] = u.samples.size();
        out << record.dump() << "\n";
    }
}

void generate_tone_dataset(const fs::path& root, int n_classes,
                           int clips_per_class, double seconds,
                           int sample_rate, std::uint64_t seed) {
    if (n_classes < 2 || clips_per_class < 1 || seconds <= 0.0 ||
        sample_rate < 1000) {
        throw std::invalid_argument("generate_tone_dataset: bad arguments");
    }
    fs::create_directories(root);
    rng::Engine engine(seed);
    std::ofstream listing(root / "testing_list.txt");

    const auto n_samples = static_cast<std::size_t>(
        std::llround(seconds * sample_rate));
    for (int c = 0; c < n_classes; ++c) {
        char folder[16];
        std::snprintf(folder, sizeof(folder), "tone%02d", c);
        fs::create_directories(root / folder);
        const double freq = 200.0 + 100.0 * c; // below Nyquist for <= 35 classes at 8 kHz
        for (int clip = 0; clip < clips_per_class; ++clip) {
            const double amp = rng::uniform(engine, 0.25, 0.75);
            const double phase = rng::uniform(engine, 0.0, 2.0 * kPi);
            std::vector<double> samples(n_samples);
            for (std::size_t t = 0; t < n_samples; ++t) {
                const double noise = 0.02 * rng::normal(engine);
                samples[t] =
                    amp * std::sin(2.0 * kPi * freq * t / sample_rate + phase) +
                    noise;
            }
            char file[24];
            std::snprintf(file, sizeof(file), "clip%03d.wav", clip);
            write_wav_pcm16(root / folder / file, samples, sample_rate);
            if (clip % 5 == 4) {
                listing << folder << "/" << file << "\n";
            }
        }
    }
}

} // namespace qkws
