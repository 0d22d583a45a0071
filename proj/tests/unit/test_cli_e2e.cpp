// End-to-end run of the installed CLI binary: convert -> partition ->
// transform -> analyze on a small fixture, checking files and exit codes.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "csyn/network.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    std::cerr << "[FAIL] " << what << "\n";
    ++failures;
  } else {
    std::cout << "[ok] " << what << "\n";
  }
}

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

int main() {
  const std::string cli = CSYN_CLI_PATH;
  const fs::path dir = fs::temp_directory_path() / "csyn_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string();

  // an edge table for convert
  {
    std::ofstream out(d + "/edges.tsv");
    out << "# source target weight distance_mm\n";
    out << "1\t2\t0.7\t10\n2\t1\t0.7\t10\n";
    out << "1\t3\t0.4\t30\n3\t1\t0.4\t30\n";
  }
  expect(run(cli + " convert --edges " + d + "/edges.tsv --out " + d +
             " --name conv --type2-node 0 >/dev/null 2>&1") == 0,
         "convert exits 0");
  expect(fs::exists(d + "/conv.net"), "convert wrote conv.net");

  // a structured fixture for the analysis chain
  {
    const csyn::ModelRegistry reg = csyn::builtin_models();
    csyn::save_network(d + "/net.net",
                       fixtures::driven_pair(1.0, 0.3, 0.15, 2.0), reg);
  }
  expect(run(cli + " partition --net " + d + "/net.net --out " + d +
             " >/dev/null 2>&1") == 0,
         "partition exits 0");
  expect(fs::exists(d + "/clustering.txt"), "clustering.txt written");
  expect(fs::exists(d + "/clustering.dot"), "clustering.dot written");

  expect(run(cli + " transform --net " + d + "/net.net --out " + d +
             " >/dev/null 2>&1") == 0,
         "transform exits 0");
  expect(fs::exists(d + "/T.txt"), "T.txt written");
  expect(fs::exists(d + "/blocks.txt"), "blocks.txt written");

  expect(run(cli + " analyze --net " + d + "/net.net --out " + d +
             " --dt 0.05 --transient 150 --horizon 100 --align 20 --param" +
             std::string(" delay:1 >/dev/null 2>&1")) == 0,
         "analyze exits 0");
  expect(fs::exists(d + "/stability.txt"), "stability.txt written");

  // validation failure maps to exit 2
  {
    std::ofstream out(d + "/broken.net");
    out << "name broken\nnodes 2\ntypes 1\nlayers 1\n";
    out << "nodemodel 1 fhn\nnode 1 1\nnode 2 1\n";
    out << "layer 1\nsigma 1\ndelay_ms 0\nsynapse electrical\nmatrix\n";
    out << "0 1 1\n1 0 1\n1 1 0\nend\n";
  }
  expect(run(cli + " partition --net " + d + "/broken.net --out " + d +
             " >/dev/null 2>&1") == 2,
         "broken file exits 2");

  // admissibility failure maps to exit 4: two equitable 2-clusters coupled by
  // asymmetric links (1 one way, 2 the other)
  {
    csyn::MultilayerNetwork net2;
    net2.name = "inadmissible";
    net2.node_types = {1, 1, 1, 1};
    net2.node_models[1] = "fhn";
    csyn::Layer l;
    l.adjacency = csyn::Matrix::Zero(4, 4);
    l.adjacency(0, 2) = 1.0;
    l.adjacency(1, 3) = 1.0;
    l.adjacency(2, 0) = 2.0;
    l.adjacency(3, 1) = 2.0;
    l.synapse_id = "electrical";
    net2.layers = {l};
    const csyn::ModelRegistry reg = csyn::builtin_models();
    csyn::save_network(d + "/inadmissible.net", net2, reg);
  }
  expect(run(cli + " transform --net " + d + "/inadmissible.net --out " + d +
             " >/dev/null 2>&1") == 4,
         "inadmissible network exits 4");

  if (failures) {
    std::cerr << failures << " e2e check(s) failed\n";
    return 1;
  }
  std::cout << "cli e2e passed\n";
  return 0;
}
