#include "csyn/network.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace csyn {

namespace {

double parse_double(const std::string& tok, const std::string& ctx) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  double v = 0.0;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e)
    throw ParseError("bad number '" + tok + "' in " + ctx);
  return v;
}

int parse_int(const std::string& tok, const std::string& ctx) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  int v = 0;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e)
    throw ParseError("bad integer '" + tok + "' in " + ctx);
  return v;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

void MultilayerNetwork::validate(const ModelRegistry& registry) const {
  const int n = size();
  if (n <= 0) throw ValidationError("network has no nodes");
  std::set<int> type_ids(node_types.begin(), node_types.end());
  for (int t : type_ids) {
    auto it = node_models.find(t);
    if (it == node_models.end())
      throw ValidationError("type_id " + std::to_string(t) +
                            " has no node model mapping");
    if (!registry.has_node_model(it->second))
      throw ValidationError("unknown node model '" + it->second + "'");
  }
  if (layers.empty()) throw ValidationError("network has no layers");
  for (size_t k = 0; k < layers.size(); ++k) {
    const Layer& ly = layers[k];
    const std::string ctx = "layer " + std::to_string(k + 1);
    if (ly.adjacency.rows() != n || ly.adjacency.cols() != n)
      throw ValidationError(ctx + ": adjacency is " +
                            std::to_string(ly.adjacency.rows()) + "x" +
                            std::to_string(ly.adjacency.cols()) +
                            ", expected " + std::to_string(n) + "x" +
                            std::to_string(n));
    if (!ly.adjacency.allFinite())
      throw ValidationError(ctx + ": non-finite weight");
    if ((ly.adjacency.array() < 0.0).any())
      throw ValidationError(ctx + ": negative weight");
    if (!(ly.delay_ms >= 0.0))
      throw ValidationError(ctx + ": negative delay");
    if (!registry.has_synapse_model(ly.synapse_id))
      throw ValidationError(ctx + ": unknown synapse model '" + ly.synapse_id +
                            "'");
    if (!ly.allow_self_coupling &&
        !registry.synapse_model(ly.synapse_id).allows_self_coupling()) {
      for (int i = 0; i < n; ++i)
        if (ly.adjacency(i, i) != 0.0)
          throw ValidationError(ctx + ": self-loop at node " +
                                std::to_string(i + 1));
    }
  }
}

int MultilayerNetwork::state_dim(const ModelRegistry& registry) const {
  int base = 0;
  for (int t : std::set<int>(node_types.begin(), node_types.end()))
    base = std::max(base, registry.node_model(node_models.at(t)).dim());
  std::set<std::string> dynamical;
  for (const Layer& ly : layers)
    if (registry.synapse_model(ly.synapse_id).dynamical())
      dynamical.insert(ly.synapse_id);
  return base + static_cast<int>(dynamical.size());
}

double MultilayerNetwork::max_delay() const {
  double d = 0.0;
  for (const Layer& ly : layers) d = std::max(d, ly.delay_ms);
  return d;
}

double MultilayerNetwork::max_abs_weight() const {
  double w = 0.0;
  for (const Layer& ly : layers)
    if (ly.adjacency.size() > 0)
      w = std::max(w, ly.adjacency.cwiseAbs().maxCoeff());
  return w;
}

MultilayerNetwork load_network(const std::string& path,
                               const ModelRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  MultilayerNetwork net;
  int n = -1, m = -1, l = -1, declared_dim = -1;
  std::string line;
  int lineno = 0;
  std::vector<int> node_seen;
  int current_layer = -1;

  auto need = [&](const std::vector<std::string>& toks, size_t count,
                  const std::string& what) {
    if (toks.size() != count)
      throw ParseError(what + " at line " + std::to_string(lineno));
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto toks = split_ws(line);
    const std::string& key = toks[0];
    const std::string ctx = "line " + std::to_string(lineno);

    if (key == "name") {
      need(toks, 2, "name expects one token");
      net.name = toks[1];
    } else if (key == "nodes") {
      need(toks, 2, "nodes expects one value");
      n = parse_int(toks[1], ctx);
    } else if (key == "types") {
      need(toks, 2, "types expects one value");
      m = parse_int(toks[1], ctx);
    } else if (key == "layers") {
      need(toks, 2, "layers expects one value");
      l = parse_int(toks[1], ctx);
    } else if (key == "state_dim") {
      need(toks, 2, "state_dim expects one value");
      declared_dim = parse_int(toks[1], ctx);
    } else if (key == "nodemodel") {
      need(toks, 3, "nodemodel expects <type_id> <name>");
      net.node_models[parse_int(toks[1], ctx)] = toks[2];
    } else if (key == "node") {
      need(toks, 3, "node expects <index> <type_id>");
      if (n < 0) throw ParseError("node table before 'nodes' header");
      if (net.node_types.empty()) net.node_types.assign(n, 0);
      const int idx = parse_int(toks[1], ctx);
      if (idx < 1 || idx > n)
        throw ParseError("node index " + toks[1] + " out of range at " + ctx);
      net.node_types[idx - 1] = parse_int(toks[2], ctx);
      node_seen.push_back(idx);
    } else if (key == "layer") {
      need(toks, 2, "layer expects <k>");
      current_layer = parse_int(toks[1], ctx);
      if (current_layer != static_cast<int>(net.layers.size()) + 1)
        throw ParseError("layers must appear in order at " + ctx);
      net.layers.emplace_back();
    } else if (key == "sigma" || key == "delay_ms" || key == "synapse" ||
               key == "selfloops") {
      if (current_layer < 0) throw ParseError(key + " outside layer at " + ctx);
      need(toks, 2, key + " expects one value");
      Layer& ly = net.layers.back();
      if (key == "sigma")
        ly.sigma = parse_double(toks[1], ctx);
      else if (key == "delay_ms")
        ly.delay_ms = parse_double(toks[1], ctx);
      else if (key == "synapse")
        ly.synapse_id = toks[1];
      else
        ly.allow_self_coupling = parse_int(toks[1], ctx) != 0;
    } else if (key == "matrix") {
      if (current_layer < 0 || n < 0)
        throw ParseError("matrix outside layer at " + ctx);
      Matrix a(n, n);
      for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line))
          throw ParseError("truncated matrix in layer " +
                           std::to_string(current_layer));
        ++lineno;
        auto row = split_ws(line);
        if (static_cast<int>(row.size()) != n)
          throw ParseError("matrix row has " + std::to_string(row.size()) +
                           " entries, expected " + std::to_string(n) +
                           " at line " + std::to_string(lineno));
        for (int j = 0; j < n; ++j)
          a(i, j) = parse_double(row[j], "matrix line " + std::to_string(lineno));
      }
      net.layers.back().adjacency = std::move(a);
    } else if (key == "end") {
      break;
    } else {
      throw ParseError("unknown keyword '" + key + "' at " + ctx);
    }
  }

  if (n < 0 || l < 0) throw ParseError("missing nodes/layers header");
  if (static_cast<int>(net.layers.size()) != l)
    throw ParseError("header declares " + std::to_string(l) + " layers, found " +
                     std::to_string(net.layers.size()));
  if (static_cast<int>(node_seen.size()) != n)
    throw ParseError("node table has " + std::to_string(node_seen.size()) +
                     " rows, expected " + std::to_string(n));
  std::set<int> distinct_types(net.node_types.begin(), net.node_types.end());
  if (m >= 0 && static_cast<int>(distinct_types.size()) > m)
    throw ParseError("node table uses more types than declared");

  net.validate(registry);

  if (declared_dim >= 0) {
    const int expect = net.state_dim(registry);
    if (declared_dim != expect)
      throw ValidationError("state_dim " + std::to_string(declared_dim) +
                            " does not match registered models (" +
                            std::to_string(expect) + ")");
  }
  return net;
}

void save_network(const std::string& path, const MultilayerNetwork& net,
                  const ModelRegistry& registry) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  const int n = net.size();
  out << "# csyn network v1\n";
  out << "name " << (net.name.empty() ? "net" : net.name) << "\n";
  out << "nodes " << n << "\n";
  std::set<int> types(net.node_types.begin(), net.node_types.end());
  out << "types " << types.size() << "\n";
  out << "layers " << net.num_layers() << "\n";
  out << "state_dim " << net.state_dim(registry) << "\n";
  for (const auto& [tid, model] : net.node_models)
    if (types.count(tid)) out << "nodemodel " << tid << " " << model << "\n";
  for (int i = 0; i < n; ++i)
    out << "node " << (i + 1) << " " << net.node_types[i] << "\n";
  for (int k = 0; k < net.num_layers(); ++k) {
    const Layer& ly = net.layers[k];
    out << "layer " << (k + 1) << "\n";
    out << "sigma " << format_full(ly.sigma) << "\n";
    out << "delay_ms " << format_full(ly.delay_ms) << "\n";
    out << "synapse " << ly.synapse_id << "\n";
    if (ly.allow_self_coupling) out << "selfloops 1\n";
    out << "matrix\n";
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (j) out << " ";
        out << format_full(ly.adjacency(i, j));
      }
      out << "\n";
    }
  }
  out << "end\n";
}

std::vector<EdgeRecord> load_edge_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::vector<EdgeRecord> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',' || c == '\t' || c == ';') c = ' ';
    auto toks = split_ws(line);
    if (toks.size() < 4)
      throw ParseError("edge table line " + std::to_string(lineno) +
                       ": expected source target weight distance_mm");
    // skip a header row
    if (lineno == 1 && !std::isdigit(static_cast<unsigned char>(toks[0][0])))
      continue;
    EdgeRecord e;
    const std::string ctx = "edge line " + std::to_string(lineno);
    e.source = parse_int(toks[0], ctx);
    e.target = parse_int(toks[1], ctx);
    e.weight = parse_double(toks[2], ctx);
    e.distance_mm = parse_double(toks[3], ctx);
    edges.push_back(e);
  }
  return edges;
}

MultilayerNetwork convert_edge_table(const std::vector<EdgeRecord>& edges,
                                     const ConvertOptions& opts) {
  int n = opts.num_nodes;
  for (const EdgeRecord& e : edges) n = std::max({n, e.source, e.target});
  if (n <= 0) throw ValidationError("convert: empty edge table and no node count");

  Matrix raw = Matrix::Zero(n, n);
  Matrix dist = Matrix::Zero(n, n);
  for (const EdgeRecord& e : edges) {
    if (e.source < 1 || e.source > n || e.target < 1 || e.target > n)
      throw ValidationError("convert: edge endpoint out of range");
    raw(e.target - 1, e.source - 1) = e.weight;  // row = receiver
    dist(e.target - 1, e.source - 1) = e.distance_mm;
  }

  Matrix a1, a2;
  if (opts.quantize_first) {
    const Matrix q = quantize_weights(raw, opts.levels);
    std::tie(a1, a2) = classify_by_distance(q, dist, opts.threshold_mm);
  } else {
    auto [r1, r2] = classify_by_distance(raw, dist, opts.threshold_mm);
    a1 = quantize_weights(r1, opts.levels);
    a2 = quantize_weights(r2, opts.levels);
  }

  MultilayerNetwork net;
  net.name = opts.name;
  net.node_types.assign(n, 1);
  net.node_models[1] = opts.model1;
  if (opts.type2_node >= 1 && opts.type2_node <= n) {
    net.node_types[opts.type2_node - 1] = 2;
    net.node_models[2] = opts.model2;
  }
  Layer l1;
  l1.adjacency = std::move(a1);
  l1.sigma = opts.sigma1;
  l1.delay_ms = 0.0;
  l1.synapse_id = opts.synapse1;
  Layer l2;
  l2.adjacency = std::move(a2);
  l2.sigma = opts.sigma2;
  l2.delay_ms = opts.delay2_ms;
  l2.synapse_id = opts.synapse2;
  net.layers.push_back(std::move(l1));
  net.layers.push_back(std::move(l2));
  return net;
}

}  // namespace csyn
