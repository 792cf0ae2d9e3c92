#include <gtest/gtest.h>

#include <cstdlib>

#include "utpcr/judge.hpp"
#include "utpcr/judge_stub.hpp"

using namespace utpcr;

namespace {

JudgeRequest checkpoint(std::string desc) {
  JudgeRequest r;
  r.kind = RequestKind::CheckpointVerdict;
  r.query_id = "q1";
  r.query = "a red cat on a mat";
  r.key = "c1";
  r.payload = std::move(desc);
  r.artifact_refs = {"img://final/0"};
  return r;
}

JudgeBackendSpec remote_spec(int port, ParsePolicy policy = ParsePolicy::Strict, int retries = 2) {
  JudgeBackendSpec s;
  s.backend = JudgeBackend::Remote;
  s.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/judge";
  s.model_name = "judge-test";
  s.timeout = std::chrono::milliseconds(2000);
  s.retry_backoff = std::chrono::milliseconds(0);
  s.max_retries = retries;
  s.parse_policy = policy;
  return s;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoError;
}

}  // namespace

TEST(ReplyParsing, Verdicts) {
  EXPECT_EQ(parse_verdict("ACCEPT"), Verdict::Accept);
  EXPECT_EQ(parse_verdict("I would refuse this."), Verdict::Refuse);
  EXPECT_EQ(parse_verdict("Refuse. Not accept."), Verdict::Refuse);
  EXPECT_EQ(parse_verdict("unacceptable"), std::nullopt);
  EXPECT_EQ(parse_verdict("maybe"), std::nullopt);
}

TEST(ReplyParsing, Labels) {
  EXPECT_EQ(parse_reflection_label("GOOD"), ReflectionLabel::Good);
  EXPECT_EQ(parse_reflection_label("over-reflection"), ReflectionLabel::Over);
  EXPECT_EQ(parse_reflection_label("understood"), std::nullopt);
}

TEST(ReplyParsing, Scores) {
  EXPECT_EQ(parse_score("Score: 5", 6), 5);
  EXPECT_EQ(parse_score("5/6", 6), 5);
  EXPECT_EQ(parse_score("7", 6), std::nullopt);
  EXPECT_EQ(parse_score("-1", 6), std::nullopt);
  EXPECT_EQ(parse_score("none", 6), std::nullopt);
}

TEST(WireRequest, Shape) {
  auto j = wire_request(checkpoint("the cat is red"), "m");
  EXPECT_EQ(j["model"], "m");
  const auto& content = j["messages"][0]["content"];
  EXPECT_EQ(j["messages"][0]["role"], "user");
  EXPECT_EQ(content[0]["type"], "text");
  EXPECT_NE(content[0]["text"].get<std::string>().find("the cat is red"), std::string::npos);
  EXPECT_EQ(content[1], (nlohmann::json{{"type", "image_ref"}, {"ref", "img://final/0"}}));
}

TEST(MockJudge, Constants) {
  MockJudge judge(Verdict::Refuse, 4, ReflectionLabel::Over);
  EXPECT_EQ(judge_checkpoint(judge, checkpoint("x")), Verdict::Refuse);
  EXPECT_EQ(evaluate_plan(judge, "q1", "q", "1. draw", 6), 4);
  JudgeRequest r;
  r.kind = RequestKind::ReflectionQuality;
  r.payload = "looks fine";
  EXPECT_EQ(classify_reflection(judge, r), ReflectionLabel::Over);
}

TEST(MockJudge, RequestValidation) {
  MockJudge judge;
  auto r = checkpoint("");
  EXPECT_EQ(code_of([&] { judge_checkpoint(judge, r); }), ErrorCode::InvalidRequest);
  r = checkpoint("x");
  r.artifact_refs.clear();
  EXPECT_EQ(code_of([&] { judge_checkpoint(judge, r); }), ErrorCode::InvalidRequest);
  EXPECT_EQ(code_of([&] { evaluate_plan(judge, "q", "q", "  ", 6); }), ErrorCode::InvalidRequest);
}

TEST(ScriptedJudge, ReplaysByKey) {
  nlohmann::json script = {{"entries",
                            {{{"kind", "checkpoint"}, {"query_id", "q1"}, {"key", "c1"}, {"reply", "REFUSE"}},
                             {{"kind", "plan"}, {"query_id", "q1"}, {"key", "plan"}, {"reply", "Score 3"}},
                             {{"kind", "plan"}, {"query_id", "q2"}, {"key", "plan"}, {"reply", "9"}}}}};
  ScriptedJudge judge(script);
  EXPECT_EQ(judge_checkpoint(judge, checkpoint("x")), Verdict::Refuse);
  EXPECT_EQ(evaluate_plan(judge, "q1", "q", "plan", 6), 3);
  EXPECT_EQ(code_of([&] { evaluate_plan(judge, "q2", "q", "plan", 6); }), ErrorCode::MalformedReply);
  auto other = checkpoint("x");
  other.key = "c9";
  EXPECT_EQ(code_of([&] { judge_checkpoint(judge, other); }), ErrorCode::JudgeUnavailable);
}

TEST(JudgeSpec, FromJsonAndEnv) {
  auto s = JudgeBackendSpec::from_json({{"backend", "remote"}, {"endpoint", "http://h:1/x"}, {"timeout_ms", 50}});
  EXPECT_EQ(s.backend, JudgeBackend::Remote);
  EXPECT_EQ(s.timeout.count(), 50);
  ::setenv("UTPCR_JUDGE_TIMEOUT_MS", "75", 1);
  ::setenv("UTPCR_JUDGE_ENDPOINT", "http://other:2/y", 1);
  s.apply_env();
  ::unsetenv("UTPCR_JUDGE_TIMEOUT_MS");
  ::unsetenv("UTPCR_JUDGE_ENDPOINT");
  EXPECT_EQ(s.timeout.count(), 75);
  EXPECT_EQ(*s.endpoint, "http://other:2/y");
  EXPECT_THROW(JudgeBackendSpec::from_json({{"backend", "remote"}}), Error);
  EXPECT_THROW(JudgeBackendSpec::from_json({{"backend", "oracle"}}), Error);
}

TEST(RemoteJudge, AcceptRefuseAndScores) {
  StubJudgeServer stub(nlohmann::json{{"rules",
                         {{{"contains", "cat is red"}, {"content", "ACCEPT"}},
                          {{"contains", "cat is blue"}, {"content", "refuse: the cat is red"}},
                          {{"contains", "Plan:"}, {"content", "I rate this 5 out of 6"}}}}});
  int port = stub.start();
  RemoteJudge judge(remote_spec(port));
  EXPECT_EQ(judge_checkpoint(judge, checkpoint("the cat is red")), Verdict::Accept);
  EXPECT_EQ(judge_checkpoint(judge, checkpoint("the cat is blue")), Verdict::Refuse);
  EXPECT_EQ(evaluate_plan(judge, "q1", "q", "1. draw a cat", 6), 5);
  auto seen = stub.received();
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_EQ(seen[0]["model"], "judge-test");
  EXPECT_EQ(seen[0]["messages"][0]["content"][1]["ref"], "img://final/0");
}

TEST(RemoteJudge, RetriesThenSucceeds) {
  StubJudgeServer stub(nlohmann::json{{"fail_first", 2}, {"default", {{"content", "ACCEPT"}}}});
  RemoteJudge judge(remote_spec(stub.start(), ParsePolicy::Strict, 2));
  EXPECT_EQ(judge_checkpoint(judge, checkpoint("x")), Verdict::Accept);
  EXPECT_EQ(stub.requests_served(), 3);
}

TEST(RemoteJudge, RetryExhaustion) {
  StubJudgeServer stub(nlohmann::json{{"fail_first", 10}, {"default", {{"content", "ACCEPT"}}}});
  RemoteJudge judge(remote_spec(stub.start(), ParsePolicy::Strict, 2));
  EXPECT_EQ(code_of([&] { judge_checkpoint(judge, checkpoint("x")); }), ErrorCode::JudgeUnavailable);
  EXPECT_EQ(stub.requests_served(), 3);
}

TEST(RemoteJudge, ClientErrorIsNotRetried) {
  StubJudgeServer stub(nlohmann::json{{"default", {{"status", 400}, {"content", "bad"}}}});
  RemoteJudge judge(remote_spec(stub.start()));
  EXPECT_EQ(code_of([&] { judge_checkpoint(judge, checkpoint("x")); }), ErrorCode::JudgeUnavailable);
  EXPECT_EQ(stub.requests_served(), 1);
}

TEST(RemoteJudge, MalformedReplies) {
  StubJudgeServer stub(nlohmann::json{{"rules",
                         {{{"contains", "Plan:"}, {"content", "excellent plan"}},
                          {{"contains", "garbage body"}, {"raw_body", "<html>oops</html>"}}}},
                        {"default", {{"content", "I am not sure"}}}});
  int port = stub.start();
  RemoteJudge strict(remote_spec(port));
  EXPECT_EQ(code_of([&] { judge_checkpoint(strict, checkpoint("x")); }), ErrorCode::MalformedReply);

  RemoteJudge lenient(remote_spec(port, ParsePolicy::RefuseOnMalformed));
  std::vector<std::string> notes;
  lenient.on_diagnostic = [&](const std::string& m) { notes.push_back(m); };
  EXPECT_EQ(judge_checkpoint(lenient, checkpoint("x")), Verdict::Refuse);
  EXPECT_EQ(judge_checkpoint(lenient, checkpoint("garbage body")), Verdict::Refuse);
  EXPECT_EQ(evaluate_plan(lenient, "q1", "q", "1. draw", 6), 0);
  EXPECT_EQ(notes.size(), 3u);

  JudgeRequest r;
  r.kind = RequestKind::ReflectionQuality;
  r.payload = "fine";
  EXPECT_EQ(code_of([&] { classify_reflection(lenient, r); }), ErrorCode::MalformedReply);
}

TEST(RemoteJudge, BearerTokenFromEnvironment) {
  StubJudgeServer stub(nlohmann::json{{"default", {{"content", "ACCEPT"}}}});
  auto spec = remote_spec(stub.start());
  ::setenv("UTPCR_TEST_TOKEN", "sekrit", 1);
  spec.token_env = "UTPCR_TEST_TOKEN";
  RemoteJudge judge(spec);
  EXPECT_EQ(judge_checkpoint(judge, checkpoint("x")), Verdict::Accept);
  ::unsetenv("UTPCR_TEST_TOKEN");
}

TEST(RemoteJudge, ConcurrentSubmitsCorrelate) {
  StubJudgeServer stub(nlohmann::json{{"rules", {{{"contains", "odd"}, {"content", "REFUSE"}}}}, {"default", {{"content", "ACCEPT"}}}});
  auto spec = remote_spec(stub.start());
  spec.max_in_flight = 3;
  RemoteJudge judge(spec);
  std::vector<std::future<JudgeResponse>> f;
  for (int i = 0; i < 12; ++i) {
    auto r = checkpoint(i % 2 ? "odd one" : "even one");
    r.id = judge.next_request_id();
    f.push_back(judge.submit(r));
  }
  for (int i = 0; i < 12; ++i) {
    auto resp = f[static_cast<std::size_t>(i)].get();
    EXPECT_EQ(resp.request_id, static_cast<std::uint64_t>(i + 1));
    EXPECT_EQ(*resp.verdict, i % 2 ? Verdict::Refuse : Verdict::Accept);
  }
}
