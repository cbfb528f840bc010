#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mammoth2/numerics/array.hpp"

namespace m2 {

// Flat registry of named parameter arrays, each tagged with an optimizer
// group ("und", "gen", "align", "dit", "tok", "tok_frozen", ...). Modules
// register parameters at construction and keep integer ids; forward passes
// receive the ParamSet so a deep copy of the set (optimizer snapshots,
// reference policies) is usable with the same module objects.
//
// All parameters must be registered before any forward pass: tape leaves
// bind by array address, so the entry vector must not reallocate afterwards.
class ParamSet {
public:
    int add(std::string name, numerics::Array value, std::string group) {
        M2_CHECK(by_name_.find(name) == by_name_.end(), "duplicate parameter name: " + name);
        int id = static_cast<int>(entries_.size());
        by_name_.emplace(name, id);
        entries_.push_back(Entry{std::move(name), std::move(value), std::move(group)});
        return id;
    }

    int find(const std::string& name) const {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? -1 : it->second;
    }

    int count() const { return static_cast<int>(entries_.size()); }

    numerics::Array& value(int id) { return entries_[static_cast<size_t>(id)].value; }
    const numerics::Array& value(int id) const { return entries_[static_cast<size_t>(id)].value; }
    numerics::Array* ptr(int id) { return &entries_[static_cast<size_t>(id)].value; }
    const std::string& name(int id) const { return entries_[static_cast<size_t>(id)].name; }
    const std::string& group(int id) const { return entries_[static_cast<size_t>(id)].group; }

    std::vector<int> ids_in_group(const std::string& group) const {
        std::vector<int> ids;
        for (int i = 0; i < count(); ++i)
            if (entries_[static_cast<size_t>(i)].group == group) ids.push_back(i);
        return ids;
    }

private:
    struct Entry {
        std::string name;
        numerics::Array value;
        std::string group;
    };

    std::vector<Entry> entries_;
    std::unordered_map<std::string, int> by_name_;
};

}  // namespace m2
