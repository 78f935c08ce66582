#pragma once

// Reference computations the tests compare the implementation against. None
// of them call into the code under test.

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rowlight/netlist.hpp"

namespace oracle {

using PinPair = std::pair<std::string, std::string>;

// What a plain DOM walk over netlist XML sees.
struct XmlFacts {
    std::set<std::string> components;
    std::map<std::string, std::set<PinPair>> net_members;  // unique pairs per net
    std::map<PinPair, int> assignments;
};

// Boost.PropertyTree reader, independent of the expat-based parser.
XmlFacts walk_xml(const std::string& xml);

// Rows of a component by scanning every assignment.
std::set<int> scan_rows(const rowlight::netlist::Netlist& netlist, const std::string& component_id);

// Level a pin driven with these back-to-back steps from t = 0 has at time t,
// read through a divider of num/den. Zero before and after the schedule.
struct Step {
    int mv;
    int ms;
};
int schedule_mv(const std::vector<Step>& steps, std::int64_t t, int num = 1, int den = 1);

// Random circuits in two spellings: `dirty` repeats members, adds singleton
// and empty nets and shuffles element order; `clean` is the minimal XML with
// the same meaning.
struct RandomCircuit {
    std::string dirty;
    std::string clean;
};
RandomCircuit random_circuit(std::mt19937_64& rng);

// Random raw model (possibly with duplicate members and short nets) whose rows
// are all in range and whose references all resolve.
rowlight::netlist::Netlist random_raw_netlist(std::mt19937_64& rng);

std::string read_text(const std::string& path);

}  // namespace oracle
