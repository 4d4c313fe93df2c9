#include "casgcn/ingest.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace casgcn::io {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kFormatHeader = "# cascade-v1";

[[noreturn]] void line_error(const std::string& source, std::size_t line_no,
                             const std::string& what) {
  throw std::runtime_error(source + ":" + std::to_string(line_no) + ": " + what);
}

// Integral values are serialized without a fraction so files stay plain
// decimal and round-trip byte-identically.
ordered_json number_json(double v) {
  if (std::floor(v) == v && std::abs(v) < 9.0e15) {
    return ordered_json(static_cast<std::int64_t>(v));
  }
  return ordered_json(v);
}

double number_field(const ordered_json& j, const char* field, const std::string& source,
                    std::size_t line_no) {
  if (!j.is_number()) line_error(source, line_no, std::string("field ") + field + " must be a number");
  return j.get<double>();
}

}  // namespace

std::vector<LabeledCascade> read_cascades(std::istream& in, const std::string& source_name) {
  std::vector<LabeledCascade> cascades;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line_no == 1 && line != kFormatHeader) {
        line_error(source_name, line_no, "unrecognized format header: " + line);
      }
      continue;
    }

    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      line_error(source_name, line_no, std::string("malformed record: ") + e.what());
    }
    if (!j.is_object()) line_error(source_name, line_no, "record is not an object");
    for (const auto& [key, _] : j.items()) {
      if (key != "cascade_id" && key != "window_t" && key != "nodes" && key != "edges" &&
          key != "label") {
        line_error(source_name, line_no, "unknown field: " + key);
      }
    }
    for (const char* required : {"cascade_id", "window_t", "nodes", "edges"}) {
      if (!j.contains(required)) {
        line_error(source_name, line_no, std::string("missing field: ") + required);
      }
    }

    LabeledCascade cascade;
    if (!j["cascade_id"].is_string()) line_error(source_name, line_no, "field cascade_id must be a string");
    cascade.graph.cascade_id = j["cascade_id"].get<std::string>();
    cascade.graph.window_t = number_field(j["window_t"], "window_t", source_name, line_no);

    if (!j["nodes"].is_array()) line_error(source_name, line_no, "field nodes must be a list");
    for (const auto& entry : j["nodes"]) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
          !entry[1].is_number()) {
        line_error(source_name, line_no, "field nodes: entries must be [id, seconds] pairs");
      }
      cascade.graph.nodes.push_back({entry[0].get<std::string>(), entry[1].get<double>()});
    }
    if (!j["edges"].is_array()) line_error(source_name, line_no, "field edges must be a list");
    for (const auto& entry : j["edges"]) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
          !entry[1].is_string()) {
        line_error(source_name, line_no, "field edges: entries must be [src, dst] pairs");
      }
      cascade.graph.edges.emplace_back(entry[0].get<std::string>(), entry[1].get<std::string>());
    }
    if (j.contains("label")) {
      if (!j["label"].is_number_integer() || j["label"].get<std::int64_t>() < 0) {
        line_error(source_name, line_no, "field label must be a non-negative integer");
      }
      cascade.label = GrowthLabel{j["label"].get<std::int64_t>()};
    }

    auto report = validate_cascade(cascade.graph);
    if (!report.ok()) {
      line_error(source_name, line_no,
                 "invalid cascade \"" + cascade.graph.cascade_id + "\": " + report.violations.front());
    }
    cascades.push_back(std::move(cascade));
  }
  return cascades;
}

std::vector<LabeledCascade> read_cascades(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open cascade file: " + path);
  return read_cascades(in, path);
}

void write_cascades(const std::vector<LabeledCascade>& cascades, std::ostream& out) {
  out << kFormatHeader << "\n";
  for (const auto& cascade : cascades) {
    ordered_json j;
    j["cascade_id"] = cascade.graph.cascade_id;
    j["window_t"] = number_json(cascade.graph.window_t);
    auto& nodes = j["nodes"] = ordered_json::array();
    for (const auto& node : cascade.graph.nodes) {
      nodes.push_back(ordered_json::array({node.id, number_json(node.time)}));
    }
    auto& edges = j["edges"] = ordered_json::array();
    for (const auto& [src, dst] : cascade.graph.edges) {
      edges.push_back(ordered_json::array({src, dst}));
    }
    if (cascade.label) j["label"] = cascade.label->delta_s;
    out << j.dump() << "\n";
  }
}

void write_cascades(const std::vector<LabeledCascade>& cascades, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open cascade file for writing: " + path);
  write_cascades(cascades, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<NodeId> parse_chain_text(const std::string& text) {
  std::string chain = text;
  if (auto colon = chain.find(':'); colon != std::string::npos) chain.resize(colon);
  while (!chain.empty() && chain.back() == ' ') chain.pop_back();
  if (chain.empty()) return {};
  if (chain.rfind("//@", 0) != 0) {
    throw std::invalid_argument("chain text must start with //@: " + text);
  }

  std::vector<NodeId> users;
  std::size_t pos = 3;
  while (true) {
    const std::size_t next = chain.find("//@", pos);
    const std::string user =
        chain.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (user.empty()) throw std::invalid_argument("empty user in chain: " + text);
    users.push_back(user);
    if (next == std::string::npos) break;
    pos = next + 3;
  }
  return users;
}

WeiboParseResult parse_weibo_cascade(const NodeId& origin_author, double origin_time,
                                     std::vector<WeiboRecord> records, double window_t) {
  (void)origin_time;  // record timestamps are already relative to the origin
  if (origin_author.empty()) throw std::invalid_argument("weibo: empty origin author");

  std::stable_sort(records.begin(), records.end(),
                   [](const WeiboRecord& a, const WeiboRecord& b) {
                     return a.timestamp < b.timestamp;
                   });

  WeiboParseResult result;
  // Earliest retweet per author wins; later ones are reported and dropped.
  std::unordered_map<NodeId, const WeiboRecord*> by_author;
  std::vector<const WeiboRecord*> kept;
  for (const auto& record : records) {
    if (record.author.empty()) throw std::invalid_argument("weibo: empty record author");
    if (record.timestamp < 0.0) {
      throw std::invalid_argument("weibo: negative timestamp for \"" + record.author + "\"");
    }
    for (const auto& user : record.chain) {
      if (user == record.author) {
        throw std::invalid_argument("weibo: author \"" + record.author +
                                    "\" appears in its own chain");
      }
    }
    if (record.timestamp > window_t) continue;
    auto [it, inserted] = by_author.emplace(record.author, &record);
    if (!inserted) {
      std::ostringstream os;
      os << "duplicate retweet by \"" << record.author << "\" at " << record.timestamp
         << " (kept earliest at " << it->second->timestamp << ")";
      result.notes.push_back(os.str());
      continue;
    }
    kept.push_back(&record);
  }

  // A node's time is its own record's timestamp when it has one, otherwise
  // the earliest timestamp of any record whose chain mentions it.
  std::map<NodeId, double> node_time;
  for (const auto* record : kept) node_time[record->author] = record->timestamp;
  for (const auto* record : kept) {
    for (const auto& user : record->chain) {
      if (user == origin_author) continue;
      auto it = node_time.find(user);
      if (it == node_time.end()) {
        node_time[user] = record->timestamp;
      } else if (!by_author.count(user) && record->timestamp < it->second) {
        node_time[user] = record->timestamp;
      }
    }
  }

  std::set<Edge> edges;
  for (const auto* record : kept) {
    NodeId prev = origin_author;
    for (auto it = record->chain.rbegin(); it != record->chain.rend(); ++it) {
      if (*it == origin_author) continue;  // the chain spelled out the root
      edges.emplace(prev, *it);
      prev = *it;
    }
    edges.emplace(prev, record->author);
  }

  CascadeGraph& graph = result.graph;
  graph.cascade_id = origin_author;
  graph.window_t = window_t;
  graph.nodes.push_back({origin_author, 0.0});
  std::vector<TimedNode> others;
  others.reserve(node_time.size());
  for (const auto& [id, time] : node_time) others.push_back({id, time});
  std::sort(others.begin(), others.end(), [](const TimedNode& a, const TimedNode& b) {
    return a.time != b.time ? a.time < b.time : a.id < b.id;
  });
  graph.nodes.insert(graph.nodes.end(), others.begin(), others.end());
  graph.edges.assign(edges.begin(), edges.end());

  auto report = validate_cascade(graph);
  if (!report.ok()) {
    throw std::invalid_argument("weibo cascade \"" + graph.cascade_id +
                                "\" invalid: " + report.violations.front());
  }
  return result;
}

LabeledCascade parse_weibo_labeled(const NodeId& origin_author, double origin_time,
                                   const std::vector<WeiboRecord>& records, double t,
                                   double delta_t, std::vector<std::string>* notes) {
  if (!(t > 0.0) || !(delta_t > 0.0)) {
    throw std::invalid_argument("weibo: observation and growth windows must be positive");
  }
  auto full = parse_weibo_cascade(origin_author, origin_time, records, t + delta_t);
  auto observed = parse_weibo_cascade(origin_author, origin_time, records, t);
  if (notes) *notes = full.notes;

  std::int64_t growth = 0;
  for (const auto& node : full.graph.nodes) {
    if (node.time > t && node.time <= t + delta_t) ++growth;
  }
  return LabeledCascade{std::move(observed.graph), GrowthLabel{growth}};
}

LabeledCascade build_citation_cascade(const NodeId& target,
                                      const std::vector<CitationRecord>& corpus, int t_years,
                                      int delta_t_years) {
  if (t_years <= 0 || delta_t_years <= 0) {
    throw std::invalid_argument("citation: observation and growth windows must be positive");
  }

  const CitationRecord* root = nullptr;
  for (const auto& record : corpus) {
    if (record.paper == target) {
      root = &record;
      break;
    }
  }
  if (!root) throw std::out_of_range("citation: unknown target paper: " + target);

  auto check_reference_years = [](const CitationRecord& citer, const NodeId& cited,
                                  int cited_year) {
    if (citer.year < cited_year) {
      throw std::invalid_argument("citation: \"" + citer.paper + "\" (" +
                                  std::to_string(citer.year) + ") references later paper \"" +
                                  cited + "\" (" + std::to_string(cited_year) + ")");
    }
  };

  // Citers of the target, split into the observed window and the growth window.
  std::map<NodeId, const CitationRecord*> observed;
  std::int64_t growth = 0;
  for (const auto& record : corpus) {
    if (record.paper == target) continue;
    bool cites_target = false;
    for (const auto& ref : record.references) {
      if (ref == target) {
        cites_target = true;
        break;
      }
    }
    if (!cites_target) continue;
    check_reference_years(record, target, root->year);
    const int gap = record.year - root->year;
    if (gap <= t_years) {
      observed.emplace(record.paper, &record);
    } else if (gap <= t_years + delta_t_years) {
      ++growth;
    }
  }

  CascadeGraph graph;
  graph.cascade_id = target;
  graph.window_t = static_cast<double>(t_years) * kSecondsPerYear;
  graph.nodes.push_back({target, 0.0});
  for (const auto& [id, record] : observed) {
    graph.nodes.push_back({id, static_cast<double>(record->year - root->year) * kSecondsPerYear});
  }
  std::sort(graph.nodes.begin() + 1, graph.nodes.end(),
            [](const TimedNode& a, const TimedNode& b) {
              return a.time != b.time ? a.time < b.time : a.id < b.id;
            });

  std::set<Edge> edges;
  for (const auto& [id, _] : observed) edges.emplace(target, id);
  for (const auto& [citing_id, record] : observed) {
    for (const auto& ref : record->references) {
      if (ref == citing_id) continue;
      auto it = observed.find(ref);
      if (it == observed.end()) continue;
      check_reference_years(*record, ref, it->second->year);
      edges.emplace(ref, citing_id);  // information flows cited -> citing
    }
  }
  graph.edges.assign(edges.begin(), edges.end());

  auto report = validate_cascade(graph);
  if (!report.ok()) {
    throw std::invalid_argument("citation cascade \"" + target +
                                "\" invalid: " + report.violations.front());
  }
  return LabeledCascade{std::move(graph), GrowthLabel{growth}};
}

WeiboSource read_weibo_source(std::istream& in, const std::string& source_name) {
  WeiboSource source;
  std::string line;
  std::size_t line_no = 0;
  bool have_origin = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) line_error(source_name, line_no, "expected author<TAB>seconds<TAB>chain");
    if (fields[0].empty()) line_error(source_name, line_no, "field author is empty");

    double seconds = 0.0;
    try {
      seconds = std::stod(fields[1]);
    } catch (const std::exception&) {
      line_error(source_name, line_no, "field relative_seconds is not a number: " + fields[1]);
    }
    if (seconds < 0.0) line_error(source_name, line_no, "field relative_seconds is negative");

    std::vector<NodeId> chain;
    try {
      chain = parse_chain_text(fields[2]);
    } catch (const std::exception& e) {
      line_error(source_name, line_no, std::string("field chain_text: ") + e.what());
    }

    if (!have_origin && seconds == 0.0 && chain.empty()) {
      source.origin_author = fields[0];
      have_origin = true;
      continue;
    }
    source.records.push_back({fields[0], seconds, std::move(chain)});
  }
  if (!have_origin) {
    throw std::runtime_error(source_name + ": no origin line (relative_seconds 0, empty chain)");
  }
  return source;
}

WeiboSource read_weibo_source(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weibo source: " + path);
  return read_weibo_source(in, path);
}

std::vector<CitationRecord> read_citation_source(std::istream& in,
                                                 const std::string& source_name) {
  std::vector<CitationRecord> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) {
      line_error(source_name, line_no, "expected paper_id<TAB>year<TAB>refs");
    }
    CitationRecord record;
    record.paper = line.substr(0, tab1);
    if (record.paper.empty()) line_error(source_name, line_no, "field paper_id is empty");
    try {
      record.year = std::stoi(line.substr(tab1 + 1, tab2 - tab1 - 1));
    } catch (const std::exception&) {
      line_error(source_name, line_no, "field year is not an integer");
    }
    const std::string refs = line.substr(tab2 + 1);
    std::size_t start = 0;
    while (start <= refs.size() && !refs.empty()) {
      const std::size_t comma = refs.find(',', start);
      const std::string ref =
          refs.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!ref.empty()) record.references.push_back(ref);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    corpus.push_back(std::move(record));
  }
  return corpus;
}

std::vector<CitationRecord> read_citation_source(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open citation source: " + path);
  return read_citation_source(in, path);
}

}  // namespace casgcn::io
