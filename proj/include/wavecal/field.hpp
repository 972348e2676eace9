//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace wavecal {

/// Dense scalar field on a (up to) 3-D index space, x fastest.
struct Field {
    std::array<int, 3> n = {1, 1, 1};
    std::vector<double> a;

    void resize(const std::array<int, 3>& dims) {
        n = dims;
        a.assign(size(), 0.0);
    }
    long size() const { return static_cast<long>(n[0]) * n[1] * n[2]; }
    long idx(int i, int j = 0, int k = 0) const {
        return (static_cast<long>(k) * n[1] + j) * n[0] + i;
    }
    double& operator[](long i) { return a[i]; }
    double operator[](long i) const { return a[i]; }
    void fill(double v) { std::fill(a.begin(), a.end(), v); }
};

enum class CompFamily : uint8_t {
    State,     // a component of q
    AuxR,      // auxiliary field r (PML, dim >= 2)
    AuxS,      // auxiliary field s (PML, dim == 3)
    Prev,      // previous-step copy used for time-centred averages
};

/// Placement and role of one stored field.
struct ComponentSpec {
    std::string name;
    CompFamily family = CompFamily::State;
    int role = -1;              // index into the physics state vector
    int partner = -1;           // for AuxR/AuxS/Prev: the State component mirrored
    std::array<int, 3> face = {0, 0, 0};  // 1 = node at i*h along that axis
    bool half_time = false;     // lives on the half-integer time grid
};

/// All fields of a run at one time level.
struct WaveState {
    std::vector<Field> f;
    int step = 0;

    /// Largest magnitude over all fields; NaN propagates so divergence
    /// checks catch it.
    double max_abs() const {
        double m = 0.0;
        for (const auto& fld : f)
            for (double v : fld.a)
                if (!(std::abs(v) <= m)) m = std::abs(v);
        return m;
    }
};

}  // namespace wavecal
