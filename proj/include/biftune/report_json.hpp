#pragma once

// JSON views of reports and verdicts. Kept separate from the numeric
// headers so the library core has no vendored dependencies; include this
// from tools and tests that emit files.

#include <string>

#include <json.hpp>

#include "biftune/adaptation.hpp"
#include "biftune/analysis.hpp"
#include "biftune/scenario.hpp"
#include "biftune/stabcert.hpp"

namespace biftune {

using OrderedJson = nlohmann::ordered_json;

inline OrderedJson to_json(const RunReport& r) {
  OrderedJson j;
  j["final_mu_error"] = r.final_mu_error;
  j["settled"] = r.settled;
  if (r.settled) j["settle_time"] = r.settle_time;
  j["final_distance"] = r.final_distance;
  j["tail_distance"] = r.tail_distance;
  if (!std::isnan(r.final_amplitude)) j["final_amplitude"] = r.final_amplitude;
  j["accepted_steps"] = r.accepted;
  j["rejected_steps"] = r.rejected;
  j["seed"] = r.seed;
  j["horizon"] = r.horizon;
  return j;
}

inline OrderedJson to_json(const Witness& w) {
  OrderedJson j;
  j["epsilon"] = w.epsilon;
  j["t0"] = w.t0;
  j["initial_state"] = w.initial_state;
  j["shell_radius"] = w.shell_radius;
  j["threshold"] = w.threshold;
  j["escape_time"] = w.escape_time;
  j["escape_distance"] = w.escape_distance;
  j["excerpt_times"] = w.excerpt_times;
  j["excerpt_states"] = w.excerpt_states;
  return j;
}

inline OrderedJson to_json(const ClauseResult& c) {
  OrderedJson j;
  j["clause"] = c.clause;
  j["falsified"] = c.falsified;
  j["trajectories"] = c.trajectories;
  j["worst_value"] = c.worst_value;
  if (!c.note.empty()) j["note"] = c.note;
  if (c.witness) j["witness"] = to_json(*c.witness);
  return j;
}

inline OrderedJson to_json(const Verdict& v) {
  OrderedJson j;
  j["outcome"] = v.falsified ? "falsified" : "not_falsified";
  OrderedJson clauses = OrderedJson::array();
  for (const auto& c : v.clauses) clauses.push_back(to_json(c));
  j["clauses"] = clauses;
  j["tested_epsilons"] = v.tested_epsilons;
  j["u1_radii"] = v.u1_radii;
  if (v.u2_radius > 0.0) j["u2_radius"] = v.u2_radius;
  if (v.k_radius > 0.0) j["k_radius"] = v.k_radius;
  if (v.u_radius > 0.0) j["u_radius"] = v.u_radius;
  j["horizon"] = v.horizon;
  j["trajectories"] = v.trajectories;
  if (!v.notes.empty()) j["notes"] = v.notes;
  return j;
}

inline OrderedJson to_json(const HypothesisReport& r) {
  OrderedJson j;
  j["theorem"] = r.theorem;
  j["all_passed"] = r.all_passed();
  OrderedJson conds = OrderedJson::array();
  for (const auto& c : r.conditions) {
    OrderedJson cj;
    cj["name"] = c.name;
    cj["passed"] = c.passed;
    cj["margin"] = c.margin;
    if (c.witness) cj["witness"] = *c.witness;
    conds.push_back(cj);
  }
  j["conditions"] = conds;
  j["grid"] = r.grid_note;
  if (!std::isnan(r.a_eff)) {
    j["a_eff"] = r.a_eff;
    j["b_eff"] = r.b_eff;
    j["r_star"] = r.r_star;
  }
  return j;
}

inline OrderedJson to_json(const FloquetResult& f) {
  OrderedJson j;
  j["period"] = f.period;
  j["monodromy"] = {{f.monodromy[0][0], f.monodromy[0][1]},
                    {f.monodromy[1][0], f.monodromy[1][1]}};
  j["multipliers"] = {{f.multiplier1.real(), f.multiplier1.imag()},
                      {f.multiplier2.real(), f.multiplier2.imag()}};
  j["spectral_radius"] = f.spectral_radius;
  j["a_eff"] = f.a_eff;
  j["b_eff"] = f.b_eff;
  j["phase_multiplier"] = f.phase_multiplier;
  return j;
}

inline OrderedJson to_json(const Linearization& l) {
  OrderedJson j;
  j["matrix"] = {{l.A[0][0], l.A[0][1]}, {l.A[1][0], l.A[1][1]}};
  j["eigenvalues"] = {{l.eig1.real(), l.eig1.imag()}, {l.eig2.real(), l.eig2.imag()}};
  j["stable"] = l.stable;
  j["x_star"] = l.x_star;
  return j;
}

inline OrderedJson to_json(const KypResult& k) {
  OrderedJson j;
  j["P"] = {{k.storage.P[0][0], k.storage.P[0][1]}, {k.storage.P[1][0], k.storage.P[1][1]}};
  j["lambda_max"] = k.lambda_max;
  j["positive_definite"] = k.storage.positive_definite();
  return j;
}

}  // namespace biftune
