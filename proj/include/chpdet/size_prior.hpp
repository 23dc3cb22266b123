/*
 * Copyright 2026 The chpdet Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CHPDET_SIZE_PRIOR_HPP
#define CHPDET_SIZE_PRIOR_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chpdet/error.hpp"
#include "chpdet/geometry.hpp"

namespace chpdet {

struct ClassInfo {
    std::string name;
    double mean_length_m = 0.0;

    bool operator==(const ClassInfo&) const = default;
};

/// Per-class mean ship length. Class ids index `classes`.
struct ClassLengthTable {
    std::vector<ClassInfo> classes;
    double lambda = 0.2;
    double gsd = 1.0;

    void validate() const {
        detail::require(lambda > 0.0, "class table: lambda must be positive");
        detail::require(gsd > 0.0, "class table: gsd must be positive");
        for (const ClassInfo& c : classes) {
            detail::require(c.mean_length_m > 0.0, "class table: mean length of '" + c.name + "' must be positive");
        }
    }

    std::optional<int> find(const std::string& name) const {
        for (std::size_t i = 0; i < classes.size(); ++i) {
            if (classes[i].name == name) {
                return static_cast<int>(i);
            }
        }
        return std::nullopt;
    }

    int id_of(const std::string& name) const {
        if (auto id = find(name)) {
            return *id;
        }
        throw Error("unknown class '" + name + "'");
    }

    const ClassInfo& at(int class_id) const {
        if (class_id < 0 || static_cast<std::size_t>(class_id) >= classes.size()) {
            throw Error("unknown class id " + std::to_string(class_id));
        }
        return classes[static_cast<std::size_t>(class_id)];
    }

    bool operator==(const ClassLengthTable&) const = default;
};

/// Built-in table: one real class plus synthetic classes used by the scene generator.
inline ClassLengthTable default_class_table() {
    return {{{"ticonderoga", 172.8}, {"synthetic_small", 60.0}, {"synthetic_medium", 110.0}}, 0.2, 1.0};
}

/**
 * Two-sided Gaussian tail beyond the observed deviation:
 *   p = 2 (1 - Phi(|l - L| / (lambda L))) = erfc(|l - L| / (lambda L sqrt 2)).
 * Equals 1 at l = L and decreases strictly with |l - L|.
 */
inline double size_prior_probability(double length_m, double mean_length_m, double lambda) {
    detail::require(mean_length_m > 0.0, "size prior: mean length must be positive");
    detail::require(lambda > 0.0, "size prior: lambda must be positive");
    detail::require(length_m >= 0.0, "size prior: length must be non-negative");
    const double delta = mean_length_m * lambda;
    return std::erfc(std::fabs(length_m - mean_length_m) / (delta * std::numbers::sqrt2));
}

/// Multiplies each score by the length prior of its class. Length in metres is h * gsd.
inline std::vector<ChpBox> refine_scores(std::span<const ChpBox> dets, const ClassLengthTable& table) {
    table.validate();
    std::vector<ChpBox> out(dets.begin(), dets.end());
    for (ChpBox& d : out) {
        const ClassInfo& info = table.at(d.class_id);
        d.score *= size_prior_probability(d.h * table.gsd, info.mean_length_m, table.lambda);
    }
    return out;
}

}  // namespace chpdet

#endif
