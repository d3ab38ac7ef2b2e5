// Prints the piece table of a potential file and re-derives its probe values,
// confirming a reader of the file can reproduce the writer's numbers bitwise.

#include <cstdio>
#include <iostream>

#include "embeig/errors.hpp"
#include "embeig/potential.hpp"
#include "embeig/serialize.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: potential_probe POTENTIAL.json\n";
    return 1;
  }
  try {
    nlohmann::json j = embeig::load_json_file(argv[1]);
    embeig::Potential pot = embeig::potential_from_json(j);
    std::printf("horizon %lld, %zu pieces, %zu energies, sup |V|(1+n) = %.6g\n",
                static_cast<long long>(pot.horizon), pot.pieces.size(),
                pot.energies.size(), pot.sup_v_scaled);
    std::printf("%-6s %-12s %-12s %-8s %-22s %-12s\n", "idx", "start", "end",
                "kind", "energy", "k1");
    for (std::size_t i = 0; i < pot.pieces.size(); ++i) {
      const auto& pc = pot.pieces[i];
      std::printf("%-6zu %-12lld %-12lld %-8s %-22.17g %-12.6g\n", i,
                  static_cast<long long>(pc.start),
                  static_cast<long long>(pc.end), embeig::to_string(pc.kind),
                  pc.energy, pc.k1);
    }
    auto check = embeig::check_probes(pot, j);
    std::printf("probes %lld checked, %lld mismatched\n",
                static_cast<long long>(check.probes_total),
                static_cast<long long>(check.probes_mismatched));
    if (check.probes_mismatched > 0) {
      std::printf("first mismatch at n=%lld\n",
                  static_cast<long long>(check.first_bad_site));
      return 3;
    }
    return 0;
  } catch (const embeig::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}
