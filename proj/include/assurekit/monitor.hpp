#pragma once

#include <vector>

#include "assurekit/property.hpp"

namespace assurekit {

/// Truth of a path formula's atoms in one chain state.
struct AtomValuation {
    bool phi = false;
    bool psi = false;
    std::vector<std::pair<bool, bool>> eventualities;  // (phi_i, psi_i)
};

/// Finite deterministic monitor for one of the six patterns. The step
/// function consumes one state's atom valuation; the lasso predicate decides
/// acceptance on the infinite repetition of an absorbing state.
///
/// State encodings (all patterns fit in at most 3 states):
///   Eventually:  0 pending, 1 accepted
///   Globally:    0 ok, 1 violated
///   Response:    0 no obligation, 1 obligation pending
///   NextSafety:  0 previous state lacked phi, 1 previous state had phi,
///                2 violated
///   Until:       0 waiting, 1 satisfied, 2 violated
///   GloballyAny: 0 (stateless; the reduction lemma decides on the lasso)
struct Monitor {
    PathFormula::Pattern pattern;
    int n_states = 1;
    int initial = 0;
    std::vector<bool> eventuality_is_until;  // GloballyAny only

    int step(int m, const AtomValuation& v) const {
        using P = PathFormula::Pattern;
        switch (pattern) {
            case P::Eventually:
                return (m == 1 || v.phi) ? 1 : 0;
            case P::Globally:
                return (m == 1 || !v.phi) ? 1 : 0;
            case P::Response:
                if (v.psi) return 0;
                if (v.phi) return 1;
                return m;
            case P::NextSafety:
                if (m == 2) return 2;
                if (m == 1 && v.psi) return 2;
                return v.phi ? 1 : 0;
            case P::Until:
                if (m != 0) return m;
                if (v.psi) return 1;
                if (!v.phi) return 2;
                return 0;
            case P::GloballyAny:
                return 0;
        }
        return m;
    }

    /// Acceptance of the pending obligation on s^omega, where v is the
    /// absorbing state's atom valuation and m the monitor state after
    /// consuming that state once.
    bool lasso(int m, const AtomValuation& v) const {
        using P = PathFormula::Pattern;
        switch (pattern) {
            case P::Eventually:
                return m == 1 || v.phi;
            case P::Globally:
                return m == 0 && v.phi;
            case P::Response:
                return m == 0 || v.psi;
            case P::NextSafety:
                return m != 2 && !(v.phi && v.psi);
            case P::Until:
                return m == 1 || (m == 0 && v.psi);
            case P::GloballyAny:
                // lasso(F phi) = phi(s); lasso(F (phi U psi)) = psi(s)
                for (std::size_t i = 0; i < v.eventualities.size(); ++i) {
                    bool hit = eventuality_is_until[i] ? v.eventualities[i].second
                                                       : v.eventualities[i].first;
                    if (hit) return true;
                }
                return false;
        }
        return false;
    }
};

inline Monitor compile_monitor(const PathFormula& path) {
    Monitor mon;
    mon.pattern = path.pattern;
    switch (path.pattern) {
        case PathFormula::Pattern::Eventually:
        case PathFormula::Pattern::Globally:
            mon.n_states = 2;
            break;
        case PathFormula::Pattern::Response:
            mon.n_states = 2;
            break;
        case PathFormula::Pattern::NextSafety:
        case PathFormula::Pattern::Until:
            mon.n_states = 3;
            break;
        case PathFormula::Pattern::GloballyAny:
            mon.n_states = 1;
            for (const auto& ev : path.eventualities)
                mon.eventuality_is_until.push_back(ev.is_until);
            break;
    }
    return mon;
}

}  // namespace assurekit
