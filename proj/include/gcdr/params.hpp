#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gcdr/tensor.hpp"

namespace gcdr {

// Named parameter store with per-entry gradient accumulator and Adam state.
// Ids are dense [0, size); names are unique. A backward pass accumulates into
// grad() and marks entries active; the optimizer visits active entries only.
class ParamSet {
public:
    int add(const std::string& name, Tensor value) {
        if (by_name_.count(name)) throw ValueError("param set: duplicate name '" + name + "'");
        Entry e;
        e.name = name;
        e.grad = Tensor::zeros(value.shape());
        e.m = Tensor::zeros(value.shape());
        e.v = Tensor::zeros(value.shape());
        e.value = std::move(value);
        const int id = static_cast<int>(entries_.size());
        entries_.push_back(std::move(e));
        by_name_.emplace(name, id);
        return id;
    }

    int size() const { return static_cast<int>(entries_.size()); }

    // Id for a name, or -1 when absent.
    int find(const std::string& name) const {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? -1 : it->second;
    }

    int require(const std::string& name) const {
        const int id = find(name);
        if (id < 0) throw LookupError("param set: unknown parameter '" + name + "'");
        return id;
    }

    void check_id(int id) const {
        if (id < 0 || id >= size()) throw LookupError("param set: invalid id");
    }

    const std::string& name(int id) const { return entry(id).name; }
    Tensor& value(int id) { return entry(id).value; }
    const Tensor& value(int id) const { return entry(id).value; }
    Tensor& grad(int id) { return entry(id).grad; }
    const Tensor& grad(int id) const { return entry(id).grad; }
    Tensor& adam_m(int id) { return entry(id).m; }
    Tensor& adam_v(int id) { return entry(id).v; }
    std::int64_t& adam_t(int id) { return entry(id).t; }

    bool active(int id) const { return entry(id).active; }
    void mark_active(int id) { entry(id).active = true; }

    // Zero the optimizer moments and step counts; values and grads untouched.
    void reset_adam() {
        for (auto& e : entries_) {
            e.m.mat().setZero();
            e.v.mat().setZero();
            e.t = 0;
        }
    }

    // Zero every gradient accumulator and clear the active marks.
    void zero_grad() {
        for (auto& e : entries_) {
            e.grad.mat().setZero();
            e.active = false;
        }
    }

    std::vector<int> ids() const {
        std::vector<int> out(entries_.size());
        for (int i = 0; i < size(); ++i) out[static_cast<std::size_t>(i)] = i;
        return out;
    }

    std::vector<int> ids_with_prefix(const std::string& prefix) const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i)
            if (entries_[static_cast<std::size_t>(i)].name.rfind(prefix, 0) == 0) out.push_back(i);
        return out;
    }

private:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
        Tensor m, v;        // Adam moments
        std::int64_t t = 0; // Adam step count
        bool active = false;
    };

    Entry& entry(int id) {
        check_id(id);
        return entries_[static_cast<std::size_t>(id)];
    }
    const Entry& entry(int id) const {
        check_id(id);
        return entries_[static_cast<std::size_t>(id)];
    }

    std::vector<Entry> entries_;
    std::unordered_map<std::string, int> by_name_;
};

}  // namespace gcdr
