#include "marvel/serialize.hpp"

#include <sstream>

#include "json.hpp"

namespace marvel {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

std::string cycle_model_to_json(const CycleModel& model) {
  ordered j;
  j["default_cost"] = model.default_cost;
  j["taken_branch_extra"] = model.taken_branch_extra;
  ordered ov = ordered::object();
  for (const auto& [op, c] : model.overrides) ov[std::string(mnemonic(op))] = c;
  j["overrides"] = ov;
  return j.dump(2);
}

CycleModel cycle_model_from_json(std::string_view text) {
  CycleModel m;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ConfigError("cycle model must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "default_cost") {
        m.default_cost = value.get<std::uint32_t>();
      } else if (key == "taken_branch_extra") {
        m.taken_branch_extra = value.get<std::uint32_t>();
      } else if (key == "overrides") {
        for (const auto& [name, cost] : value.items()) {
          auto op = op_from_mnemonic(name);
          if (!op || *op == Op::Illegal) throw ConfigError("unknown instruction kind '" + name + "'");
          m.overrides[*op] = cost.get<std::uint32_t>();
        }
      } else {
        throw ConfigError("unknown cycle model key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed cycle model: ") + e.what());
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

namespace {

ordered counts_json(const PatternCounts& c) {
  ordered j;
  j["add"] = c.add;
  j["mul"] = c.mul;
  j["mul_add"] = c.mul_add;
  j["addi"] = c.addi;
  j["addi_addi"] = c.addi_addi;
  j["fusedmac"] = c.fusedmac;
  j["blt"] = c.blt;
  j["total_retired"] = c.total_retired;
  return j;
}

}  // namespace

std::string pattern_report_json(const PatternReport& report) {
  ordered j;
  j["raw"] = counts_json(report.raw);
  j["weighted"] = counts_json(report.weighted);
  return j.dump(2);
}

std::string pattern_report_csv(const PatternReport& report) {
  std::ostringstream os;
  os << "kind,add,mul,mul_add,addi,addi_addi,fusedmac,blt,total_retired\n";
  for (const auto& [name, c] : {std::pair{"raw", &report.raw}, std::pair{"weighted", &report.weighted}})
    os << name << ',' << c->add << ',' << c->mul << ',' << c->mul_add << ',' << c->addi << ',' << c->addi_addi << ','
       << c->fusedmac << ',' << c->blt << ',' << c->total_retired << '\n';
  return os.str();
}

std::string histogram_csv(const ImmediateHistogram& hist) {
  std::ostringstream os;
  os << "i1,i2,signed,weight\n";
  for (const auto& [k, w] : hist.unsigned_pairs) os << k.first << ',' << k.second << ",0," << w << '\n';
  for (const auto& [k, w] : hist.signed_pairs) os << k.first << ',' << k.second << ",1," << w << '\n';
  return os.str();
}

std::string rewrite_stats_json(const RewriteStats& stats) {
  ordered j = ordered::object();
  for (Rule r : kAllRules) {
    ordered e;
    e["min_variant"] = variant_name(rule_min_variant(r));
    e["matched"] = stats[r].matched;
    e["applied"] = stats[r].applied;
    e["estimated_cycles_saved"] = stats[r].estimated_cycles_saved;
    j[std::string(rule_name(r))] = e;
  }
  return j.dump(2);
}

std::string run_summary_json(const RunResult& result, Variant variant, const CycleModel& model) {
  ordered j;
  j["variant"] = variant_name(variant);
  j["cycle_model"] = ordered::parse(cycle_model_to_json(model));
  j["cycles"] = result.cycles;
  j["retired"] = result.retired;
  j["taken_branches"] = result.state.taken_branches;
  j["loop_backjumps"] = result.state.loop_backjumps;
  ordered per = ordered::object();
  for (std::size_t i = 0; i < kOpCount; ++i)
    if (result.state.retired[i] != 0) per[std::string(mnemonic(static_cast<Op>(i)))] = result.state.retired[i];
  j["retired_by_kind"] = per;
  return j.dump(2);
}

}  // namespace marvel
