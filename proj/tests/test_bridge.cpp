#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <thread>

#include "semsearch/server.hpp"
#include "test_util.hpp"

using namespace semsearch;

namespace {

SessionConfig coverage_session() {
  SessionConfig cfg;
  cfg.episode.planner.mode = PlannerMode::coverage;
  return cfg;
}

std::vector<json> run_to_end(Session& s, std::vector<json>& log) {
  while (!s.episode().done()) {
    for (auto& m : s.handle_line(R"({"type":"step","n":5})")) log.push_back(m);
  }
  return log;
}

const json* find_type(const std::vector<json>& msgs, const std::string& type) {
  for (const auto& m : msgs) {
    if (m["type"] == type) return &m;
  }
  return nullptr;
}

}  // namespace

TEST(BeliefRows, RoundTrip) {
  Grid<CellState> g(7, 2, CellState::unexplored);
  g[Cell{1, 0}] = CellState::free;
  g[Cell{2, 0}] = CellState::free;
  g[Cell{6, 0}] = CellState::occupied;
  Grid<CellState> back(7, 2, CellState::free);
  for (int y = 0; y < 2; ++y) decode_belief_row(encode_belief_row(g, y), y, back);
  EXPECT_EQ(back, g);
}

TEST(Session, SnapshotContract) {
  Session s(generate_scenario(1, {}), coverage_session());
  const auto snap = s.snapshot();
  EXPECT_EQ(snap["type"], "snapshot");
  EXPECT_EQ(snap["format_version"], kProtocolVersion);
  EXPECT_EQ(snap["grid"]["width"], 100);
  EXPECT_EQ(snap["class_names"].size(), GeneratorConfig{}.class_names().size());
  EXPECT_EQ(snap["run_mode"], "paused");
  EXPECT_TRUE(snap.contains("revision"));
}

TEST(Session, PausedTickDoesNothing) {
  Session s(generate_scenario(1, {}), coverage_session());
  EXPECT_TRUE(s.tick().empty());
  s.handle_line(R"({"type":"resume"})");
  const auto msgs = s.tick();
  ASSERT_NE(find_type(msgs, "delta"), nullptr);
  s.handle_line(R"({"type":"pause"})");
  EXPECT_TRUE(s.tick().empty());
  EXPECT_EQ(s.episode().steps(), 1);
}

TEST(Session, MalformedInputYieldsErrors) {
  Session s(generate_scenario(1, {}), coverage_session());
  EXPECT_EQ(s.handle_line("{oops")[0]["error"], "ParseError");
  EXPECT_EQ(s.handle_line(R"({"type":"fly"})")[0]["error"], "IllegalCommand");
  EXPECT_EQ(s.handle_line(R"({"type":"intervene","frontier_id":-3})")[0]["error"], "InvalidIntervention");
}

TEST(Session, ReplayReconstructsFinalChecksum) {
  Session s(generate_scenario(2, {}), coverage_session());
  std::vector<json> log{s.snapshot()};
  run_to_end(s, log);
  BeliefReplay replay;
  for (const auto& m : log) replay.apply(json::parse(m.dump()));
  ASSERT_TRUE(replay.final_checksum().has_value());
  EXPECT_EQ(replay.checksum(), *replay.final_checksum());
}

TEST(Session, ThreeInterventionsThreeHumanRecords) {
  Session s(generate_scenario(3, {}), coverage_session());
  std::map<long, json> frontier_tables{{s.revision(), s.snapshot()["frontiers"]}};
  int accepted = 0;
  while (accepted < 3 && !s.episode().done()) {
    const long rev = s.revision();
    const auto& table = frontier_tables.at(rev);
    if (table.size() >= 2) {
      const int id = table.back()["id"].get<int>();
      json cmd = {{"type", "intervene"}, {"frontier_id", id}, {"revision", rev}};
      const auto reply = s.handle(cmd);
      ASSERT_EQ(reply[0]["type"], "ack") << reply[0].dump();
      EXPECT_TRUE(reply[0]["recorded"].get<bool>());
      const auto& rec = s.human_records().back();
      EXPECT_EQ(rec.revision, rev);
      EXPECT_EQ(rec.provenance, Provenance::human);
      ASSERT_EQ(rec.candidates.size(), table.size());
      for (std::size_t i = 0; i < table.size(); ++i) EXPECT_EQ(rec.candidates[i].frontier_id, table[i]["id"].get<int>());
      ++accepted;
    }
    for (const auto& m : s.handle_line(R"({"type":"step"})")) {
      if (m["type"] == "delta") frontier_tables[m["revision"].get<long>()] = m["frontiers"];
    }
    frontier_tables[s.revision()] = frontier_tables.rbegin()->second;
  }
  EXPECT_EQ(accepted, 3);
  EXPECT_EQ(s.human_records().size(), 3u);
}

TEST(Session, InterveningOnCurrentSubgoalIsRecorded) {
  Session s(generate_scenario(4, {}), coverage_session());
  const auto subgoal_is_frontier = [&] {
    const auto ids = s.episode().graph().frontier_ids();
    const int g = s.episode().policy().subgoal();
    return ids.size() >= 2 && std::binary_search(ids.begin(), ids.end(), g);
  };
  while (!s.episode().done() && !subgoal_is_frontier()) s.handle_line(R"({"type":"step"})");
  ASSERT_FALSE(s.episode().done());
  const int subgoal = s.episode().policy().subgoal();
  const auto reply = s.handle({{"type", "intervene"}, {"frontier_id", subgoal}});
  EXPECT_EQ(reply[0]["type"], "ack");
  EXPECT_EQ(s.human_records().size(), 1u);
}

TEST(Session, StaleFrontierRejected) {
  Session s(generate_scenario(5, {}), coverage_session());
  const long rev = s.revision();
  const auto initial = s.episode().graph().frontier_ids();
  ASSERT_FALSE(initial.empty());
  int vanished = -1;
  while (vanished < 0 && !s.episode().done()) {
    s.handle_line(R"({"type":"step"})");
    const auto now = s.episode().graph().frontier_ids();
    for (int id : initial) {
      if (!std::binary_search(now.begin(), now.end(), id)) vanished = id;
    }
  }
  ASSERT_GE(vanished, 0);
  const auto reply = s.handle({{"type", "intervene"}, {"frontier_id", vanished}, {"revision", rev}});
  EXPECT_EQ(reply[0]["type"], "error");
  EXPECT_EQ(reply[0]["error"], "InvalidIntervention");
  EXPECT_TRUE(s.human_records().empty());
}

TEST(Session, SetModeAndReset) {
  SessionConfig cfg = coverage_session();
  Session s(generate_scenario(6, {}), cfg);
  EXPECT_EQ(s.handle_line(R"({"type":"set_mode","mode":"learned"})")[0]["error"], "IllegalCommand");
  EXPECT_EQ(s.handle_line(R"({"type":"set_mode","mode":"oracle_priorities"})")[0]["type"], "ack");
  s.handle_line(R"({"type":"step","n":3})");
  const auto reply = s.handle_line(R"({"type":"reset","seed":4})");
  ASSERT_EQ(reply.size(), 2u);
  EXPECT_EQ(reply[1]["type"], "snapshot");
  EXPECT_EQ(reply[1]["step"], 0);
  EXPECT_EQ(reply[1]["planner_mode"], "oracle_priorities");
}

namespace {

int connect_to(int port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) return -1;
  timeval tv{5, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  return fd;
}

/// Reads lines until one of type `until` arrives.
std::vector<json> read_until(int fd, const std::string& until, std::string& buffer) {
  std::vector<json> out;
  char buf[4096];
  while (true) {
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      out.push_back(json::parse(buffer.substr(0, pos)));
      buffer.erase(0, pos + 1);
      if (out.back()["type"] == until) return out;
    }
    const ssize_t n = ::read(fd, buf, sizeof buf);
    if (n <= 0) return out;
    buffer.append(buf, static_cast<std::size_t>(n));
  }
}

}  // namespace

TEST(Server, TwoClientsReceiveIdenticalStreams) {
  Session session(generate_scenario(7, {}), coverage_session());
  ServerConfig cfg;
  cfg.port = 0;
  cfg.tick_ms = 5;
  LineServer server(session, cfg);
  server.open();
  ASSERT_GT(server.bound_port(), 0);
  std::thread loop([&] { server.run(); });

  const int a = connect_to(server.bound_port());
  std::string buf_a, buf_b;
  ASSERT_GE(a, 0);
  const auto snap_a = read_until(a, "snapshot", buf_a);
  ASSERT_FALSE(snap_a.empty());
  const int b = connect_to(server.bound_port());
  ASSERT_GE(b, 0);
  const auto snap_b = read_until(b, "snapshot", buf_b);
  ASSERT_FALSE(snap_b.empty());
  EXPECT_EQ(snap_b.back()["format_version"], kProtocolVersion);

  const std::string cmd = "{\"type\":\"step\",\"n\":2}\n";
  ASSERT_EQ(::write(a, cmd.data(), cmd.size()), static_cast<ssize_t>(cmd.size()));
  std::vector<json> from_a, from_b;
  for (int k = 0; k < 2; ++k) {
    for (auto& m : read_until(a, "tour", buf_a)) from_a.push_back(m);
    for (auto& m : read_until(b, "tour", buf_b)) from_b.push_back(m);
  }
  EXPECT_EQ(from_a, from_b);
  EXPECT_NE(find_type(from_a, "delta"), nullptr);

  server.stop();
  loop.join();
  ::close(a);
  ::close(b);
}

TEST(Server, PortInUse) {
  Session session(generate_scenario(7, {}), coverage_session());
  ServerConfig cfg;
  cfg.port = 0;
  LineServer first(session, cfg);
  first.open();
  cfg.port = first.bound_port();
  LineServer second(session, cfg);
  EXPECT_THROW(second.open(), PortUnavailable);
}
