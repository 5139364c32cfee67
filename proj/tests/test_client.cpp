#include <doctest.h>

#include "modelsync/canonical_json.hpp"
#include "modelsync/client.hpp"
#include "support.hpp"

using namespace modelsync;
using namespace modelsync::client;
namespace msg = modelsync::wire::msg;
using testing::id;

namespace {

const UserId kMe = UserId::from_label("me");
const UserId kPeer = UserId::from_label("peer");

ClientReplica fresh(const ClassModel& snapshot = {}, std::uint64_t last_seq = 0) {
  msg::Welcome w;
  w.session = SessionId::from_label("s");
  w.user_id = kMe;
  w.snapshot = snapshot;
  w.last_seq = last_seq;
  w.members = {{kMe, "me"}, {kPeer, "peer"}};
  return ClientReplica::from_welcome(w);
}

ModelEvent create(const char* label) { return events::CreateClass{id(label), label, Pose::identity()}; }

// Server stand-in: sequences whatever it is handed.
struct Sequencer {
  std::uint64_t next = 1;
  msg::EventBroadcast echo(const msg::EventSubmit& s) { return {next++, kMe, s.client_tag, s.event}; }
  msg::EventBroadcast remote(ModelEvent e) { return {next++, kPeer, std::nullopt, std::move(e)}; }
};

// View of a replica with no pending edits and no live poses must mirror the
// committed model exactly.
void check_view_is_committed(const ClientReplica& r) {
  const RenderView v = r.view();
  REQUIRE(v.classes.size() == r.committed().classes.size());
  auto it = r.committed().classes.begin();
  for (const auto& rc : v.classes) {
    const ClassNode& c = (it++)->second;
    CHECK(rc.id == c.id);
    CHECK(rc.name == c.name);
    CHECK(rc.attributes == c.attributes);
    CHECK(rc.methods == c.methods);
    CHECK(rc.pose == c.pose);
    CHECK_FALSE(rc.pending);
    CHECK_FALSE(rc.live);
  }
  CHECK(v.connectors.size() == r.committed().connectors.size());
}

}  // namespace

TEST_CASE("optimistic submit") {
  ClientReplica r = fresh();
  auto s = r.submit_local(create("A"));
  REQUIRE(s);
  CHECK(r.pending().size() == 1);
  CHECK(r.committed().empty());
  const auto v = r.view();
  REQUIRE(v.classes.size() == 1);
  CHECK(v.classes[0].name == "A");
  CHECK(v.classes[0].pending);
}

TEST_CASE("pending keeps submission order with distinct tags") {
  ClientReplica r = fresh();
  auto s1 = r.submit_local(create("A"));
  auto s2 = r.submit_local(events::RenameClass{id("A"), "B"});
  REQUIRE(s1);
  REQUIRE(s2);
  CHECK(s1->client_tag != s2->client_tag);
  REQUIRE(r.pending().size() == 2);
  CHECK(r.pending()[0].client_tag == s1->client_tag);
  CHECK(r.pending()[1].client_tag == s2->client_tag);
  CHECK(r.effective_model().classes.at(id("A")).name == "B");
}

TEST_CASE("local validation blocks bad edits") {
  ClientReplica r = fresh();
  CHECK_FALSE(r.submit_local(events::RenameClass{id("A"), "B"}));
  CHECK_FALSE(r.submit_local(events::CreateClass{id("A"), "", {}}));
  CHECK(r.pending().empty());
}

TEST_CASE("echo and remote broadcasts") {
  ClientReplica r = fresh();
  Sequencer server;
  auto s = r.submit_local(create("A"));
  REQUIRE(s);
  REQUIRE(r.on_broadcast(server.echo(*s)));
  CHECK(r.pending().empty());
  CHECK(r.committed().classes.size() == 1);
  CHECK(r.last_applied_seq() == 1);

  auto s2 = r.submit_local(events::SetAttributes{id("A"), {"- x: int"}});
  REQUIRE(s2);
  REQUIRE(r.on_broadcast(server.remote(create("B"))));
  CHECK(r.committed().classes.size() == 2);
  CHECK(r.pending().size() == 1);
  CHECK(r.last_applied_seq() == 2);
}

TEST_CASE("sequence gap is reported and nothing applied") {
  ClientReplica r = fresh();
  auto gap = r.on_broadcast({2, kPeer, std::nullopt, create("A")});
  REQUIRE_FALSE(gap);
  CHECK(gap.error().expected == 1);
  CHECK(gap.error().received == 2);
  CHECK(r.committed().empty());
  CHECK(r.last_applied_seq() == 0);
}

TEST_CASE("interleaved own and remote renames follow broadcast order") {
  for (bool own_first : {true, false}) {
    ClientReplica r = fresh();
    Sequencer server;
    REQUIRE(r.on_broadcast(server.remote(create("A"))));
    auto mine = r.submit_local(events::RenameClass{id("A"), "Mine"});
    REQUIRE(mine);
    CHECK(r.view().classes[0].name == "Mine");
    std::vector<msg::EventBroadcast> order;
    if (own_first) {
      order = {server.echo(*mine), server.remote(events::RenameClass{id("A"), "Theirs"})};
    } else {
      order = {server.remote(events::RenameClass{id("A"), "Theirs"}), server.echo(*mine)};
    }
    for (const auto& b : order) REQUIRE(r.on_broadcast(b));

    ClassModel oracle;
    for (const auto& b : std::vector<ModelEvent>{create("A")}) REQUIRE(apply_event_in_place(oracle, b));
    for (const auto& b : order) REQUIRE(apply_event_in_place(oracle, b.event));
    CHECK(r.committed() == oracle);
    CHECK(r.committed().classes.at(id("A")).name == (own_first ? "Theirs" : "Mine"));
    CHECK(r.pending().empty());
    check_view_is_committed(r);
  }
}

TEST_CASE("nack handling") {
  ClientReplica r = fresh();
  Sequencer server;
  REQUIRE(r.on_broadcast(server.remote(create("A"))));

  SUBCASE("sole pending edit reverts") {
    auto s = r.submit_local(events::RenameClass{id("A"), "X"});
    REQUIRE(s);
    r.on_nack({s->client_tag, wire::NackReason::UnknownElement, id("A")});
    CHECK(r.pending().empty());
    check_view_is_committed(r);
  }
  SUBCASE("stale tag is ignored") {
    auto s = r.submit_local(events::RenameClass{id("A"), "X"});
    REQUIRE(s);
    const auto before = r.view();
    r.on_nack({s->client_tag + 100, wire::NackReason::UnknownElement, std::nullopt});
    CHECK(r.pending().size() == 1);
    CHECK(r.view() == before);
  }
  SUBCASE("submit, nack, resubmit") {
    auto bad = r.submit_local(events::SetMethods{id("A"), {"+ m()"}});
    REQUIRE(bad);
    r.on_nack({bad->client_tag, wire::NackReason::InvalidText, id("A")});
    auto good = r.submit_local(events::RenameClass{id("A"), "Fixed"});
    REQUIRE(good);
    ClassModel expected = r.committed();
    REQUIRE(apply_event_in_place(expected, good->event));
    CHECK(r.effective_model() == expected);
    CHECK(r.effective_model().classes.at(id("A")).methods.empty());
  }
}

TEST_CASE("movement and live poses") {
  ClientReplica r = fresh();
  Sequencer server;
  REQUIRE(r.on_broadcast(server.remote(create("A"))));
  r.on_grab_grant({id("A"), kPeer});

  CHECK(r.on_movement({id("A"), 1, Pose::at(1, 0, 0)}));
  CHECK(r.on_movement({id("A"), 3, Pose::at(3, 0, 0)}));
  CHECK_FALSE(r.on_movement({id("A"), 2, Pose::at(2, 0, 0)}));
  CHECK(r.effective_pose(id("A")) == Pose::at(3, 0, 0));
  const auto v = r.view();
  CHECK(v.classes[0].live);
  CHECK(v.classes[0].pose == Pose::at(3, 0, 0));
  CHECK(v.classes[0].held_by == kPeer);
  CHECK(r.view() == v);

  REQUIRE(r.on_broadcast(server.remote(events::CommitPose{id("A"), Pose::at(5, 0, 0)})));
  CHECK_FALSE(r.live_poses().at(id("A")).pose);
  CHECK(r.effective_pose(id("A")) == Pose::at(5, 0, 0));
  // A straggler from the finished drag does not reopen it.
  CHECK_FALSE(r.on_movement({id("A"), 4, Pose::at(4, 0, 0)}));
  CHECK(r.effective_pose(id("A")) == Pose::at(5, 0, 0));
  CHECK(r.owners().empty());

  // A new grant starts a fresh stream.
  r.on_grab_grant({id("A"), kPeer});
  CHECK(r.on_movement({id("A"), 1, Pose::at(7, 0, 0)}));
}

TEST_CASE("own drag") {
  ClientReplica r = fresh();
  Sequencer server;
  REQUIRE(r.on_broadcast(server.remote(create("A"))));
  CHECK_FALSE(r.move_held(id("A"), Pose::at(1, 0, 0)));
  r.on_grab_grant({id("A"), kMe});
  CHECK(r.holds(id("A")));
  auto p1 = r.move_held(id("A"), Pose::at(1, 0, 0));
  auto p2 = r.move_held(id("A"), Pose::at(2, 0, 0));
  REQUIRE(p1);
  REQUIRE(p2);
  CHECK(p2->seq > p1->seq);
  CHECK(r.effective_pose(id("A")) == Pose::at(2, 0, 0));
  auto release = r.release_held(id("A"));
  REQUIRE(release);
  CHECK(release->final_pose == Pose::at(2, 0, 0));
}

TEST_CASE("presence and peers") {
  ClientReplica r = fresh();
  wire::PresencePacket p;
  p.user = UserId::from_label("newcomer");
  p.seq = 1;
  p.head = Pose::at(1, 1.7F, 2);
  CHECK(r.on_presence(p));
  CHECK(r.peers().contains(p.user));
  const auto v = r.view();
  bool found = false;
  for (const auto& a : v.avatars) {
    if (a.user == p.user) {
      found = true;
      CHECK(double(a.label_anchor.y) == doctest::Approx(2.0).epsilon(1e-6));
    }
  }
  CHECK(found);
  CHECK_FALSE(r.on_presence(p));
  r.on_peer_left({p.user});
  CHECK_FALSE(r.peers().contains(p.user));
}

TEST_CASE("empty replica view equals committed") {
  ClientReplica r = fresh();
  check_view_is_committed(r);
  std::mt19937_64 rng(3);
  ClientReplica seeded = fresh(testing::random_model(rng, 6, 4), 10);
  check_view_is_committed(seeded);
  CHECK(seeded.last_applied_seq() == 10);
}

TEST_CASE("committed state never depends on pending") {
  Sequencer s1;
  Sequencer s2;
  ClientReplica with_pending = fresh();
  ClientReplica without = fresh();
  REQUIRE(with_pending.on_broadcast(s1.remote(create("A"))));
  REQUIRE(without.on_broadcast(s2.remote(create("A"))));
  REQUIRE(with_pending.submit_local(events::RenameClass{id("A"), "Local"}));
  REQUIRE(with_pending.submit_local(create("B")));
  REQUIRE(with_pending.on_broadcast(s1.remote(events::RenameClass{id("A"), "Remote"})));
  REQUIRE(without.on_broadcast(s2.remote(events::RenameClass{id("A"), "Remote"})));
  CHECK(canonical_model_bytes(with_pending.committed()) == canonical_model_bytes(without.committed()));
}
