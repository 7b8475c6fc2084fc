#pragma once

#include <optional>
#include <string>
#include <vector>

#include "newton_dyn/orbit.hpp"

namespace newton_dyn {

enum class TriState { Yes, No, Unknown };

const char* to_string(TriState t);

struct FreeCriticalSet {
    std::vector<double> points;             // strictly increasing
    std::vector<OrbitClassification> provenance;  // parallel to points
};

struct KneadingSymbol {
    enum class Kind { Interval, CriticalHit, Infinity };
    Kind kind = Kind::Interval;
    int j = 0;  // 1-based interval or critical index; unused for Infinity

    static KneadingSymbol interval(int j) { return {Kind::Interval, j}; }
    static KneadingSymbol hit(int j) { return {Kind::CriticalHit, j}; }
    static KneadingSymbol infinity() { return {Kind::Infinity, 0}; }

    std::string str() const;
    friend bool operator==(const KneadingSymbol&, const KneadingSymbol&) = default;
};

struct Periodicity {
    int preperiod = 0;
    int period = 0;
    friend bool operator==(const Periodicity&, const Periodicity&) = default;
};

struct KneadingSequence {
    int length = 0;  // truncation N
    std::vector<double> criticals;
    std::vector<std::vector<KneadingSymbol>> symbols;  // one row per free critical point
    std::vector<std::optional<Periodicity>> periodic;

    bool empty() const { return symbols.empty(); }
};

inline constexpr double kEpsEq = 1e-9;

// Throws NonRealMap when f has a coefficient with imaginary part above 1e-12.
FreeCriticalSet free_real_criticals(const NewtonMap& f, const OrbitBudget& b = {});

KneadingSequence kneading_sequence(const NewtonMap& f, int n, const OrbitBudget& b = {}, double eps_eq = kEpsEq);

// Smallest period, then smallest preperiod, with at least two full periods
// visible after the preperiod. Strings containing the infinity marker have none.
std::optional<Periodicity> detect_period(const std::vector<KneadingSymbol>& s);

// "1*,2,1*,2"; rows of a sequence are joined with ";" and the empty sequence is "".
std::string to_string(const std::vector<KneadingSymbol>& s);
std::string to_string(const KneadingSequence& k);
// The repeating block of a detected period, e.g. "1*,2".
std::string periodic_word(const std::vector<KneadingSymbol>& s, const Periodicity& per);

// Symbol of x with respect to the sorted free critical points.
KneadingSymbol symbol_of(double x, const std::vector<double>& criticals, double eps_eq = kEpsEq);

TriState in_family_Y(const NewtonMap& f, const OrbitBudget& b = {});

// Throws LengthMismatch when the truncations differ.
bool kneading_equal(const KneadingSequence& a, const KneadingSequence& b);

}  // namespace newton_dyn
