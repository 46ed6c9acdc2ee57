#pragma once

#include <string>
#include <vector>

namespace qp {

struct CheckItem {
    std::string name;
    bool pass = false;
    std::string witness;  // empty on pass; human-readable locus on failure
};

struct CheckReport {
    std::vector<CheckItem> items;

    void add(const std::string& name, bool pass, const std::string& witness = "") {
        items.push_back({name, pass, pass ? "" : witness});
    }
    void merge(const CheckReport& o) {
        items.insert(items.end(), o.items.begin(), o.items.end());
    }
    bool all_pass() const {
        for (const auto& it : items)
            if (!it.pass) return false;
        return true;
    }
    std::string first_failure() const {
        for (const auto& it : items)
            if (!it.pass) return it.name + (it.witness.empty() ? "" : (": " + it.witness));
        return "";
    }
};

} // namespace qp
