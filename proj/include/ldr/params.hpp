// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ldr/rng.hpp"
#include "ldr/tensor.hpp"

namespace ldr {

/// Optimizer group: the main transformer trains with its own learning rate.
enum class ParamGroup { main, other };

struct NamedTensor {
    std::string name;
    ad::Shape shape;
    std::vector<double> values;
};

/// Ordered collection of trainable leaves. Insertion order is the
/// checkpoint order, so two sets built by the same code line up.
class ParameterSet {
public:
    struct Entry {
        std::string name;
        ad::Tensor tensor;
        ParamGroup group;
    };

    ad::Tensor add(const std::string& name, ad::Shape shape, std::vector<double> values, ParamGroup group);
    ad::Tensor add_normal(const std::string& name, ad::Shape shape, double stddev, Rng& rng, ParamGroup group);
    ad::Tensor add_constant(const std::string& name, ad::Shape shape, double value, ParamGroup group);

    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    ad::Tensor get(const std::string& name) const;
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t total_size() const;

    void zero_grad();

    /// Overwrite values of matching names. Shapes must agree. Returns the
    /// number of tensors copied.
    std::size_t assign(const std::vector<NamedTensor>& source, bool require_all);
    std::vector<NamedTensor> snapshot() const;

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

/// Binary checkpoint: magic "LDRCKPT1", u64 tensor count, then per tensor
/// u64 name length, name bytes, u64 rank, rank x u64 dims, float64 payload.
/// All integers and floats little-endian.
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace ldr
