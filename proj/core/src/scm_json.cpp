#include <json.hpp>

#include "causalaug/scm.hpp"

namespace causalaug {

namespace {

using nlohmann::json;

std::string row_key(const Scm& scm, const Mechanism& m, std::size_t row) {
  std::string key;
  std::vector<int> vals(m.parents.size());
  std::size_t rem = row;
  for (std::size_t i = m.parents.size(); i-- > 0;) {
    vals[i] = static_cast<int>(rem % static_cast<std::size_t>(scm.card(m.parents[i])));
    rem /= static_cast<std::size_t>(scm.card(m.parents[i]));
  }
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) key += ',';
    key += std::to_string(vals[i]);
  }
  return key;
}

std::size_t key_to_row(const Scm& scm, const Mechanism& m, const std::string& key) {
  std::vector<int> vals;
  if (!key.empty()) {
    std::size_t start = 0;
    while (true) {
      std::size_t comma = key.find(',', start);
      vals.push_back(std::stoi(key.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (vals.size() != m.parents.size())
    throw ValidationError("scm json: CPT key arity mismatch: '" + key + "'");
  std::size_t row = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    int c = scm.card(m.parents[i]);
    if (vals[i] < 0 || vals[i] >= c)
      throw ValidationError("scm json: CPT key value out of range: '" + key + "'");
    row = row * static_cast<std::size_t>(c) + static_cast<std::size_t>(vals[i]);
  }
  return row;
}

}  // namespace

std::string to_json(const Scm& scm) {
  scm.validate();
  json j;
  j["format"] = "scm-v1";
  j["nodes"] = json::array();
  for (const auto& f : scm.factors)
    j["nodes"].push_back({{"name", f.name}, {"cardinality", f.cardinality}});
  j["edges"] = json::array();
  for (const auto& e : scm.dag.edges)
    j["edges"].push_back({scm.dag.nodes[e.first], scm.dag.nodes[e.second]});
  json mechs = json::object();
  for (std::size_t i = 0; i < scm.mechanisms.size(); ++i) {
    const Mechanism& m = scm.mechanisms[i];
    json jm;
    jm["parents"] = json::array();
    for (int p : m.parents) jm["parents"].push_back(scm.dag.nodes[p]);
    const std::size_t k = static_cast<std::size_t>(scm.card(static_cast<int>(i)));
    const std::size_t rows = m.rows.size() / k;
    json cpt = json::object();
    for (std::size_t r = 0; r < rows; ++r) {
      json row = json::array();
      for (std::size_t v = 0; v < k; ++v) row.push_back(m.rows[r * k + v]);
      cpt[row_key(scm, m, r)] = std::move(row);
    }
    jm["cpt"] = std::move(cpt);
    mechs[scm.dag.nodes[i]] = std::move(jm);
  }
  j["mechanisms"] = std::move(mechs);
  j["roles"] = {{"causal", scm.causal},
                {"confounded", scm.confounded},
                {"confounders", scm.confounders}};
  return j.dump(2);
}

Scm scm_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scm json: parse error: ") + e.what());
  }
  try {
    if (j.value("format", "") != "scm-v1")
      throw ValidationError("scm json: unknown format tag");
    Scm scm;
    for (const auto& n : j.at("nodes")) {
      scm.dag.add_node(n.at("name").get<std::string>());
      scm.factors.push_back({n.at("name").get<std::string>(), n.at("cardinality").get<int>()});
    }
    for (const auto& e : j.at("edges"))
      scm.dag.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    const json& mechs = j.at("mechanisms");
    for (std::size_t i = 0; i < scm.dag.nodes.size(); ++i) {
      const std::string& name = scm.dag.nodes[i];
      if (!mechs.contains(name)) throw ValidationError("scm json: missing mechanism for " + name);
      const json& jm = mechs.at(name);
      Mechanism m;
      m.child = static_cast<int>(i);
      for (const auto& p : jm.at("parents")) {
        int pi = scm.dag.index_of(p.get<std::string>());
        if (pi < 0) throw ValidationError("scm json: unknown parent " + p.get<std::string>());
        m.parents.push_back(pi);
      }
      std::size_t rows = 1;
      for (int p : m.parents) rows *= static_cast<std::size_t>(scm.card(p));
      const std::size_t k = static_cast<std::size_t>(scm.card(static_cast<int>(i)));
      m.rows.assign(rows * k, -1.0);
      const json& cpt = jm.at("cpt");
      if (cpt.size() != rows) throw ValidationError("scm json: CPT row count mismatch at " + name);
      for (auto it = cpt.begin(); it != cpt.end(); ++it) {
        std::size_t r = key_to_row(scm, m, it.key());
        const json& row = it.value();
        if (row.size() != k) throw ValidationError("scm json: CPT row length mismatch at " + name);
        for (std::size_t v = 0; v < k; ++v) m.rows[r * k + v] = row.at(v).get<double>();
      }
      scm.mechanisms.push_back(std::move(m));
    }
    const json& roles = j.at("roles");
    scm.causal = roles.value("causal", "");
    for (const auto& c : roles.value("confounded", json::array()))
      scm.confounded.push_back(c.get<std::string>());
    for (const auto& c : roles.value("confounders", json::array()))
      scm.confounders.push_back(c.get<std::string>());
    scm.validate();
    return scm;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scm json: malformed document: ") + e.what());
  }
}

}  // namespace causalaug
