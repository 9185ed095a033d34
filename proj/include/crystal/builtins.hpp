#pragma once

#include <string>
#include <vector>

#include "crystal/spec.hpp"

namespace crystal {

// Names: graph_a, graph_b, graph_c, thm1_1, thm1_2, thm1_3, weierstrass,
// sc_dyadic, zd:<d>, frac:<d>:<alpha>, adjacency_power:<p>, fig5_left,
// fig5_right, c_pair, dyadic_sqrt. The forms zd(2), frac(1,0.2) and
// adjacency_power(4) are accepted as well.
CrystalSpec builtin(const std::string& name);
std::vector<std::string> builtin_names();

CrystalSpec zd_adjacency(int d);
CrystalSpec adjacency_power(int p);
CrystalSpec weierstrass();
CrystalSpec sc_dyadic();
CrystalSpec dyadic_sqrt();
CrystalSpec fig5_left();
CrystalSpec fig5_right();
CrystalSpec c_pair();

}  // namespace crystal
