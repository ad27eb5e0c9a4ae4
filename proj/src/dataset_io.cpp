#include "qrd/dataset_io.hpp"
#include "qrd/rng.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace qrd {

namespace {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");
static_assert(sizeof(float) == 4 && sizeof(double) == 8);

template <typename T>
void put(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& is, const char* what) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw corruption_error(std::string("dataset truncated while reading ") + what);
    return value;
}

constexpr char kMagic[4] = {'Q', 'R', 'D', 'D'};

}  // namespace

void write_dataset(const ShotDataset& ds, std::ostream& os) {
    ds.validate();
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kDatasetFormatVersion);
    put<std::uint16_t>(os, ds.num_qubits);
    put<std::uint32_t>(os, ds.grid.num_samples);
    put<float>(os, static_cast<float>(ds.grid.sample_period_ns));
    put<std::uint64_t>(os, ds.traces.size());
    const std::string manifest = ds.manifest.serialize();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(manifest.size()));
    os.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));

    std::vector<float> row(2 * ds.grid.num_samples);
    for (std::size_t s = 0; s < ds.traces.size(); ++s) {
        put<std::uint32_t>(os, ds.labels[s].bits);
        const auto& samples = ds.traces[s].samples;
        for (std::size_t n = 0; n < samples.size(); ++n) {
            row[2 * n] = static_cast<float>(samples[n].real());
            row[2 * n + 1] = static_cast<float>(samples[n].imag());
        }
        os.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!os) throw io_error("stream failure while writing dataset");
}

void write_dataset_file(const ShotDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw io_error("cannot open for writing: " + path);
    write_dataset(ds, os);
    os.flush();
    if (!os) throw io_error("write failure: " + path);
}

ShotDataset read_dataset(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw format_error("not a QRDD dataset (bad magic)");
    const auto version = take<std::uint32_t>(is, "version");
    if (version != kDatasetFormatVersion)
        throw version_error("unsupported dataset format version " + std::to_string(version));

    ShotDataset ds;
    ds.num_qubits = take<std::uint16_t>(is, "num_qubits");
    ds.grid.num_samples = take<std::uint32_t>(is, "num_samples");
    ds.grid.sample_period_ns = take<float>(is, "sample_period_ns");
    const auto shot_count = take<std::uint64_t>(is, "shot_count");
    const auto manifest_len = take<std::uint32_t>(is, "manifest length");
    std::string manifest_text(manifest_len, '\0');
    if (manifest_len > 0) {
        is.read(manifest_text.data(), manifest_len);
        if (!is) throw corruption_error("dataset truncated while reading manifest");
    }
    ds.manifest = Manifest::parse(manifest_text);

    const std::uint32_t configs = checked_num_configurations(ds.num_qubits);
    ds.traces.reserve(shot_count);
    ds.labels.reserve(shot_count);
    std::vector<float> row(2 * static_cast<std::size_t>(ds.grid.num_samples));
    for (std::uint64_t s = 0; s < shot_count; ++s) {
        std::uint32_t bits = 0;
        is.read(reinterpret_cast<char*>(&bits), sizeof(bits));
        if (!is) throw corruption_error("dataset truncated at shot " + std::to_string(s));
        if (bits >= configs)
            throw corruption_error("shot " + std::to_string(s) + " has out-of-range label " +
                                   std::to_string(bits));
        is.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!is) throw corruption_error("dataset truncated at shot " + std::to_string(s));
        IQTrace tr;
        tr.grid = ds.grid;
        tr.samples.resize(ds.grid.num_samples);
        for (std::uint32_t n = 0; n < ds.grid.num_samples; ++n)
            tr.samples[n] = complex_t(row[2 * n], row[2 * n + 1]);
        ds.traces.push_back(std::move(tr));
        ds.labels.push_back(PreparedLabel{bits, ds.num_qubits});
    }
    // Trailing garbage means the file does not match its own header.
    is.peek();
    if (!is.eof()) throw corruption_error("dataset has trailing bytes after last shot");
    ds.validate();
    return ds;
}

ShotDataset read_dataset_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open for reading: " + path);
    return read_dataset(is);
}

namespace {

ShotDataset take_shots(const ShotDataset& ds, const std::vector<std::size_t>& which) {
    ShotDataset out;
    out.grid = ds.grid;
    out.num_qubits = ds.num_qubits;
    out.manifest = ds.manifest;
    out.traces.reserve(which.size());
    out.labels.reserve(which.size());
    for (std::size_t i : which) {
        out.traces.push_back(ds.traces[i]);
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

std::map<std::uint32_t, std::vector<std::size_t>> indices_by_label(const ShotDataset& ds) {
    std::map<std::uint32_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < ds.size(); ++i) by_label[ds.labels[i].bits].push_back(i);
    return by_label;
}

}  // namespace

std::pair<ShotDataset, ShotDataset> split_train_test(const ShotDataset& ds,
                                                     std::uint64_t train_per_label,
                                                     std::uint64_t seed) {
    ds.validate();
    auto by_label = indices_by_label(ds);
    const std::uint32_t configs = ds.num_configurations();
    if (train_per_label > 0) {
        for (std::uint32_t c = 0; c < configs; ++c) {
            auto it = by_label.find(c);
            const std::size_t have = it == by_label.end() ? 0 : it->second.size();
            if (have < train_per_label)
                throw argument_error("label " + std::to_string(c) + " has " + std::to_string(have) +
                                     " shots, need " + std::to_string(train_per_label));
        }
    }
    std::vector<char> in_train(ds.size(), 0);
    for (auto& [label, idx] : by_label) {
        Rng rng = Rng::substream(seed, label);
        std::vector<std::size_t> order = shuffled_indices(idx.size(), rng);
        for (std::uint64_t k = 0; k < train_per_label && k < order.size(); ++k)
            in_train[idx[order[k]]] = 1;
    }
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < ds.size(); ++i)
        (in_train[i] ? train_idx : test_idx).push_back(i);
    auto train = take_shots(ds, train_idx);
    auto test = take_shots(ds, test_idx);
    train.manifest.set("split.role", std::string("train"));
    train.manifest.set("split.seed", static_cast<std::uint64_t>(seed));
    test.manifest.set("split.role", std::string("test"));
    test.manifest.set("split.seed", static_cast<std::uint64_t>(seed));
    return {std::move(train), std::move(test)};
}

ShotDataset restrict_to_subset(const ShotDataset& ds, const std::vector<std::uint16_t>& qubits) {
    ds.validate();
    if (qubits.empty()) throw argument_error("subset must name at least one qubit");
    std::uint32_t spectator_mask = (ds.num_configurations() - 1);
    for (std::size_t k = 0; k < qubits.size(); ++k) {
        if (qubits[k] >= ds.num_qubits)
            throw argument_error("subset qubit " + std::to_string(qubits[k]) + " out of range");
        for (std::size_t j = k + 1; j < qubits.size(); ++j)
            if (qubits[j] == qubits[k]) throw argument_error("subset lists a qubit twice");
        spectator_mask &= ~(1u << qubits[k]);
    }
    ShotDataset out;
    out.grid = ds.grid;
    out.num_qubits = static_cast<std::uint16_t>(qubits.size());
    out.manifest = ds.manifest;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::uint32_t bits = ds.labels[i].bits;
        if (bits & spectator_mask) continue;
        std::uint32_t rebits = 0;
        for (std::size_t k = 0; k < qubits.size(); ++k)
            if ((bits >> qubits[k]) & 1u) rebits |= (1u << k);
        out.traces.push_back(ds.traces[i]);
        out.labels.push_back(PreparedLabel{rebits, out.num_qubits});
    }
    std::string names;
    for (std::size_t k = 0; k < qubits.size(); ++k)
        names += (k ? "," : "") + std::to_string(qubits[k]);
    out.manifest.set("subset.qubits", names);
    return out;
}

ShotDataset truncate_samples(const ShotDataset& ds, std::uint32_t num_samples) {
    ds.validate();
    if (num_samples == 0) throw argument_error("truncation must keep at least one sample");
    if (num_samples > ds.grid.num_samples)
        throw argument_error("truncation length exceeds trace length");
    if (num_samples == ds.grid.num_samples) return ds;
    ShotDataset out;
    out.grid = SampleGrid{ds.grid.sample_period_ns, num_samples};
    out.num_qubits = ds.num_qubits;
    out.labels = ds.labels;
    out.manifest = ds.manifest;
    out.traces.reserve(ds.size());
    for (const IQTrace& tr : ds.traces) {
        IQTrace t;
        t.grid = out.grid;
        t.samples.assign(tr.samples.begin(), tr.samples.begin() + num_samples);
        out.traces.push_back(std::move(t));
    }
    return out;
}

ShotDataset subsample_per_label(const ShotDataset& ds, std::uint64_t per_label, std::uint64_t seed) {
    auto [sub, rest] = split_train_test(ds, per_label, seed);
    (void)rest;
    return std::move(sub);
}

}  // namespace qrd
