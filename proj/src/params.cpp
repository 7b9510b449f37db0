// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/params.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ldr {

ad::Tensor ParameterSet::add(const std::string& name, ad::Shape shape, std::vector<double> values,
                             ParamGroup group) {
    if (contains(name)) {
        throw std::invalid_argument("duplicate parameter name: " + name);
    }
    auto tensor = ad::Tensor::parameter(std::move(shape), std::move(values));
    index_[name] = entries_.size();
    entries_.push_back({name, tensor, group});
    return tensor;
}

ad::Tensor ParameterSet::add_normal(const std::string& name, ad::Shape shape, double stddev, Rng& rng,
                                    ParamGroup group) {
    std::vector<double> values(ad::shape_numel(shape));
    for (double& v : values) {
        v = rng.normal() * stddev;
    }
    return add(name, std::move(shape), std::move(values), group);
}

ad::Tensor ParameterSet::add_constant(const std::string& name, ad::Shape shape, double value, ParamGroup group) {
    std::vector<double> values(ad::shape_numel(shape), value);
    return add(name, std::move(shape), std::move(values), group);
}

ad::Tensor ParameterSet::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
        throw std::out_of_range("unknown parameter: " + name);
    }
    return entries_[it->second].tensor;
}

std::size_t ParameterSet::total_size() const {
    std::size_t n = 0;
    for (const auto& e : entries_) {
        n += e.tensor.numel();
    }
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& e : entries_) {
        e.tensor.zero_grad();
    }
}

std::size_t ParameterSet::assign(const std::vector<NamedTensor>& source, bool require_all) {
    std::size_t copied = 0;
    for (const auto& nt : source) {
        auto it = index_.find(nt.name);
        if (it == index_.end()) {
            continue;
        }
        auto tensor = entries_[it->second].tensor;
        if (tensor.shape() != nt.shape) {
            throw ad::ShapeError("checkpoint tensor " + nt.name + " has shape " + ad::shape_str(nt.shape) +
                                 ", expected " + ad::shape_str(tensor.shape()));
        }
        std::copy(nt.values.begin(), nt.values.end(), tensor.mutable_data().begin());
        ++copied;
    }
    if (require_all && copied != entries_.size()) {
        throw std::runtime_error("checkpoint covers " + std::to_string(copied) + " of " +
                                 std::to_string(entries_.size()) + " parameters");
    }
    return copied;
}

std::vector<NamedTensor> ParameterSet::snapshot() const {
    std::vector<NamedTensor> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
        const auto d = e.tensor.data();
        out.push_back({e.name, e.tensor.shape(), std::vector<double>(d.begin(), d.end())});
    }
    return out;
}

namespace {

constexpr char kMagic[8] = {'L', 'D', 'R', 'C', 'K', 'P', 'T', '1'};

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
        std::memcpy(&v, bytes, sizeof(T));
        return v;
    }
}

void write_u64(std::ostream& os, std::uint64_t v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw std::runtime_error("truncated checkpoint");
    }
    return to_little(v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write checkpoint " + path.string());
    }
    os.write(kMagic, sizeof kMagic);
    write_u64(os, tensors.size());
    for (const auto& t : tensors) {
        write_u64(os, t.name.size());
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_u64(os, t.shape.size());
        for (auto d : t.shape) {
            write_u64(os, d);
        }
        for (double v : t.values) {
            v = to_little(v);
            os.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
    if (!os) {
        throw std::runtime_error("failed writing checkpoint " + path.string());
    }
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open checkpoint " + path.string());
    }
    char magic[sizeof kMagic];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path.string());
    }
    const auto count = read_u64(is);
    std::vector<NamedTensor> out;
    for (std::uint64_t i = 0; i < count; ++i) {
        NamedTensor t;
        t.name.resize(read_u64(is));
        is.read(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        const auto rank = read_u64(is);
        for (std::uint64_t d = 0; d < rank; ++d) {
            t.shape.push_back(read_u64(is));
        }
        t.values.resize(ad::shape_numel(t.shape));
        for (double& v : t.values) {
            if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
                throw std::runtime_error("truncated checkpoint");
            }
            v = to_little(v);
        }
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace ldr
