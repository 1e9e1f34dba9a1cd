#include "agentnet/scheduler.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <queue>
#include <set>
#include <stdexcept>
#include <thread>
#include <utility>

#include "agentnet/errors.hpp"

namespace agentnet {

std::string to_string(LegKind k) {
    switch (k) {
        case LegKind::produce: return "produce";
        case LegKind::feedback: return "feedback";
        case LegKind::refine: return "refine";
        case LegKind::merge: return "merge";
    }
    return "produce";
}

std::string to_string(MessageTag t) {
    switch (t) {
        case MessageTag::profile: return "profile";
        case MessageTag::task: return "task";
        case MessageTag::history: return "history";
        case MessageTag::presentation: return "presentation";
        case MessageTag::instruction: return "instruction";
        case MessageTag::reattach: return "reattach";
        case MessageTag::draft: return "draft";
    }
    return "draft";
}

namespace {

std::string edge_key(Edge e) {
    return "e:" + std::to_string(e.src) + "->" + std::to_string(e.dst);
}

bool is_approval(const std::string& reply) { return reply.rfind(kApproveToken, 0) == 0; }

// Per-agent persistent conversation plus cross-unit bookkeeping.
struct ConvoState {
    std::vector<ChatMessage> messages;
    bool header_sent = false;
    bool seeded = false;           // has been shown an artifact presentation
    std::set<Edge> seen_edges;     // dialogues already admitted (no-control mode)
};

struct LegOutcome {
    std::string final_draft;
    std::uint32_t pairs = 0;
    bool approved = false;
};

// Shared call machinery: extends one agent's conversation per call, records
// trace rows with increment token counts, and feeds the ledger. Every piece
// of text is counted once per conversation it enters.
class Dialogue {
  public:
    Dialogue(Backend& b, const RunConfig& cfg, TokenLedger* ledger)
        : backend_(b),
          task_(cfg.task),
          approval_(cfg.approval),
          memory_control_(cfg.memory_control),
          ledger_(ledger) {}

    ConvoState& state(const AgentId& id) {
        std::lock_guard<std::mutex> lk(mu_);
        return states_[id];
    }

    static TraceMessage req(const AgentId& author, MessageTag tag, std::string text) {
        TraceMessage msg;
        msg.author = author;
        msg.tag = tag;
        msg.text = std::move(text);
        return msg;
    }

    void add_header(const AgentId& id, const AgentProfile& prof,
                    std::vector<TraceMessage>& reqs) {
        auto& st = state(id);
        if (st.header_sent) return;
        st.header_sent = true;
        reqs.push_back(req(id, MessageTag::profile, prof.role_text));
        reqs.push_back(req(id, MessageTag::task, task_));
    }

    std::string call(const AgentId& id, const AgentProfile& prof, std::vector<TraceMessage> reqs,
                     MessageTag reply_tag, const std::string& key, LegKind leg,
                     std::uint32_t leg_seq, std::uint32_t round, std::vector<TraceMessage>& out) {
        auto& st = state(id);
        std::uint64_t prompt_inc = 0;
        for (auto& r : reqs) {
            r.unit_key = key;
            r.leg = leg;
            r.leg_seq = leg_seq;
            r.round = round;
            r.conversation = id;
            r.request = true;
            r.tokens = count_tokens(r.text);
            prompt_inc += r.tokens;
            st.messages.push_back(
                {r.tag == MessageTag::profile ? std::string("system") : std::string("user"),
                 r.text});
        }
        CallContext ctx{prof.template_id, prof.kind == AgentKind::critic};
        CompletionResult res =
            backend_.complete(st.messages, prof.temperature, prof.max_reply_tokens, ctx);
        st.messages.push_back({"assistant", res.text});

        TraceMessage rep;
        rep.unit_key = key;
        rep.leg = leg;
        rep.leg_seq = leg_seq;
        rep.round = round;
        rep.conversation = id;
        rep.author = id;
        rep.request = false;
        rep.tag = reply_tag;
        rep.tokens = count_tokens(res.text);
        rep.text = res.text;
        if (ledger_) ledger_->record_call(id, prompt_inc, rep.tokens);

        for (auto& r : reqs) out.push_back(std::move(r));
        std::string text = rep.text;
        out.push_back(std::move(rep));
        return text;
    }

    // Feedback leg: the src side presents the artifact, the critic answers
    // with an instruction, up to m times or until it approves.
    std::string feedback_leg(const AgentId& critic, const AgentProfile& cprof,
                             const AgentId& presenter, const std::string& fenced_in,
                             std::uint32_t m, const std::string& key, EdgeTranscript& et) {
        std::string directive;
        for (std::uint32_t k = 1; k <= m; ++k) {
            std::vector<TraceMessage> reqs;
            add_header(critic, cprof, reqs);
            reqs.push_back(req(presenter, MessageTag::presentation, fenced_in));
            directive = call(critic, cprof, std::move(reqs), MessageTag::instruction, key,
                             LegKind::feedback, 0, k, et.messages);
            et.feedback_pairs += 1;
            if (approval_ && is_approval(directive)) {
                et.feedback_approved = true;
                break;
            }
        }
        return directive;
    }

    // Instruction/draft leg shared by edge refinement and merge work. Round 1
    // forwards the given directive; later rounds either re-send it (approval
    // off) or ask the instructor to review the previous draft (approval on,
    // leg ends early on <APPROVE>). Without memory control each later round
    // re-attaches the previous exchange to the actor's context.
    LegOutcome directed_leg(const AgentId& instructor, const AgentProfile& iprof,
                            const AgentId& actor, const AgentProfile& aprof,
                            const std::string& directive, std::vector<TraceMessage> first_extras,
                            std::uint32_t m, const std::string& key, LegKind leg,
                            std::uint32_t leg_seq, std::vector<TraceMessage>& out) {
        LegOutcome lo;
        std::string prev_draft;
        std::string prev_instr;
        for (std::uint32_t k = 1; k <= m; ++k) {
            std::string instr;
            if (k == 1) {
                instr = directive;
            } else if (approval_) {
                std::vector<TraceMessage> reqs;
                add_header(instructor, iprof, reqs);
                reqs.push_back(req(actor, MessageTag::presentation, prev_draft));
                instr = call(instructor, iprof, std::move(reqs), MessageTag::instruction, key,
                             leg, leg_seq, k, out);
                if (is_approval(instr)) {
                    lo.approved = true;
                    break;
                }
            } else {
                instr = directive;
            }

            std::vector<TraceMessage> reqs;
            if (k == 1) {
                reqs = std::move(first_extras);
            } else if (!memory_control_) {
                reqs.push_back(req(instructor, MessageTag::reattach, prev_instr));
                reqs.push_back(req(actor, MessageTag::reattach, prev_draft));
            }
            reqs.push_back(req(instructor, MessageTag::instruction, instr));
            prev_draft = call(actor, aprof, std::move(reqs), MessageTag::draft, key, leg, leg_seq,
                              k, out);
            prev_instr = instr;
            lo.pairs += 1;
        }
        lo.final_draft = prev_draft;
        return lo;
    }

  private:
    Backend& backend_;
    std::string task_;
    bool approval_;
    bool memory_control_;
    TokenLedger* ledger_;
    std::mutex mu_;
    std::map<AgentId, ConvoState> states_;
};

EdgeInteractionResult run_unit_impl(Dialogue& dlg, const InteractionUnit& u, const Artifact& in,
                                    const AgentAssignment& a, const RunConfig& cfg,
                                    const std::string& history_delta) {
    const Edge e = u.edge;
    const AgentId cid = critic_id(e);
    const AgentId aid = actor_id(e.dst);
    const AgentProfile& cprof = a.edge_critics.at(e);
    const AgentProfile& aprof = a.node_actors.at(e.dst);
    const std::string fenced = fence_artifact(in.content);
    const std::string key = edge_key(e);

    EdgeInteractionResult r;
    r.transcript.edge = e;

    std::string directive = dlg.feedback_leg(cid, cprof, actor_id(e.src), fenced,
                                             u.rounds_budget, key, r.transcript);

    std::vector<TraceMessage> extras;
    dlg.add_header(aid, aprof, extras);
    {
        auto& st = dlg.state(aid);
        if (!st.seeded) {
            st.seeded = true;
            extras.push_back(Dialogue::req(actor_id(e.src), MessageTag::presentation, fenced));
        }
    }
    if (!cfg.memory_control && !history_delta.empty())
        extras.push_back(Dialogue::req(aid, MessageTag::history, history_delta));

    LegOutcome lo = dlg.directed_leg(cid, cprof, aid, aprof, directive, std::move(extras),
                                     u.rounds_budget, key, LegKind::refine, 0,
                                     r.transcript.messages);
    r.transcript.refine_pairs = lo.pairs;
    r.transcript.refine_approved = lo.approved;

    std::string content;
    if (auto body = extract_artifact(lo.final_draft)) {
        content = *body;
    } else {
        r.transcript.extraction_fallback = true;
        content = lo.final_draft;
    }
    r.refined.id = "r:" + std::to_string(e.src) + "->" + std::to_string(e.dst);
    r.refined.content = content;
    r.refined.producer = e.src;
    r.refined.version = in.version + 1;
    r.refined.token_count = count_tokens(content);
    r.refined.lineage = {in.id};
    return r;
}

// Actor-side dialogue of a refinement leg, the unit of history propagation:
// what a later agent is shown when memory control is off.
std::string refine_dialogue_text(const EdgeTranscript& et) {
    std::vector<std::string> parts;
    const AgentId aid = actor_id(et.edge.dst);
    for (const auto& msg : et.messages) {
        if (msg.leg != LegKind::refine || !(msg.conversation == aid)) continue;
        if (msg.tag != MessageTag::instruction && msg.tag != MessageTag::reattach &&
            msg.tag != MessageTag::draft)
            continue;
        parts.push_back(msg.text);
    }
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "\n";
        out += parts[i];
    }
    return out;
}

class Runner {
  public:
    Runner(const Schedule& s, const AgentAssignment& a, Backend& b, const RunConfig& cfg)
        : sched_(s), assign_(a), cfg_(cfg), dlg_(b, cfg, &ledger_) {}

    RunTrace run() {
        auto started = std::chrono::steady_clock::now();
        prepare();
        const std::uint32_t workers = std::max(1u, cfg_.workers);
        if (workers == 1) {
            worker_loop();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::uint32_t w = 0; w < workers; ++w)
                pool.emplace_back([this] { worker_loop(); });
            for (auto& th : pool) th.join();
        }
        return assemble(started);
    }

  private:
    struct Task {
        bool is_unit = false;
        std::uint32_t idx = 0;  // node id, or index into sched_.units
        std::uint32_t priority = 0;
        std::vector<std::size_t> dependents;
        std::uint32_t deps = 0;
    };

    void prepare() {
        const Topology& t = sched_.topology;
        incoming_.assign(t.node_count, {});
        for (const Edge& e : t.edges) incoming_[e.dst].push_back(e);

        if (!cfg_.memory_control) {
            // upstream_edges_[v]: edges whose dst reaches (or is) v, i.e. the
            // dialogues that influenced v's stored artifact.
            std::vector<std::vector<NodeId>> radj(t.node_count);
            for (const Edge& e : t.edges) radj[e.dst].push_back(e.src);
            upstream_edges_.assign(t.node_count, {});
            for (NodeId v = 0; v < t.node_count; ++v) {
                std::vector<char> anc(t.node_count, 0);
                std::vector<NodeId> stack{v};
                anc[v] = 1;
                while (!stack.empty()) {
                    NodeId x = stack.back();
                    stack.pop_back();
                    for (NodeId p : radj[x])
                        if (!anc[p]) {
                            anc[p] = 1;
                            stack.push_back(p);
                        }
                }
                for (const Edge& e : t.edges)
                    if (anc[e.dst]) upstream_edges_[v].push_back(e);
            }
        }

        // Task graph: one task per node (produce or finalize) and one per
        // unit. Units sharing a dst are chained so a dst actor's calls land
        // in schedule order regardless of worker count.
        const std::size_t n = t.node_count;
        tasks_.assign(n + sched_.units.size(), {});
        std::map<NodeId, std::vector<std::size_t>> units_by_dst;
        for (std::size_t ui = 0; ui < sched_.units.size(); ++ui) {
            const InteractionUnit& u = sched_.units[ui];
            Task& task = tasks_[n + ui];
            task.is_unit = true;
            task.idx = static_cast<std::uint32_t>(ui);
            task.priority = u.order_index;
            tasks_[u.edge.src].dependents.push_back(n + ui);
            task.deps += 1;
            auto& sibs = units_by_dst[u.edge.dst];
            if (!sibs.empty()) {
                tasks_[sibs.back()].dependents.push_back(n + ui);
                task.deps += 1;
            }
            sibs.push_back(n + ui);
        }
        for (NodeId v = 0; v < t.node_count; ++v) {
            Task& task = tasks_[v];
            task.idx = v;
            task.priority = sched_.node_agent_index[v];
            if (!incoming_[v].empty()) {
                tasks_[units_by_dst[v].back()].dependents.push_back(v);
                task.deps += 1;
            }
        }
        for (std::size_t ti = 0; ti < tasks_.size(); ++ti)
            if (tasks_[ti].deps == 0) ready_.push({tasks_[ti].priority, ti});
    }

    void worker_loop() {
        std::unique_lock<std::mutex> lk(pool_mu_);
        for (;;) {
            pool_cv_.wait(lk, [this] { return !ready_.empty() || completed_ == tasks_.size(); });
            if (ready_.empty()) {
                if (completed_ == tasks_.size()) return;
                continue;
            }
            std::size_t ti = ready_.top().second;
            ready_.pop();
            lk.unlock();
            if (!aborted_.load()) {
                try {
                    run_task(ti);
                } catch (const std::exception& ex) {
                    bool expected = false;
                    if (aborted_.compare_exchange_strong(expected, true)) {
                        std::lock_guard<std::mutex> g(mu_);
                        error_ = ex.what();
                    }
                }
            }
            lk.lock();
            completed_ += 1;
            for (std::size_t dep : tasks_[ti].dependents)
                if (--tasks_[dep].deps == 0) ready_.push({tasks_[dep].priority, dep});
            pool_cv_.notify_all();
        }
    }

    void run_task(std::size_t ti) {
        if (tasks_[ti].is_unit) {
            unit(sched_.units[tasks_[ti].idx]);
        } else {
            NodeId v = tasks_[ti].idx;
            if (incoming_[v].empty())
                produce(v);
            else
                finalize(v);
        }
    }

    void produce(NodeId v) {
        const AgentId aid = actor_id(v);
        const AgentProfile& prof = assign_.node_actors.at(v);
        NodeTranscript nt;
        nt.node = v;
        nt.role = LegKind::produce;
        std::vector<TraceMessage> reqs;
        dlg_.add_header(aid, prof, reqs);
        std::string reply = dlg_.call(aid, prof, std::move(reqs), MessageTag::draft,
                                      "p:" + std::to_string(v), LegKind::produce, 0, 1,
                                      nt.messages);
        std::string content;
        if (auto body = extract_artifact(reply)) {
            content = *body;
        } else {
            nt.extraction_fallback = true;
            content = reply;
        }
        Artifact art;
        art.id = "i:" + std::to_string(v);
        art.content = content;
        art.producer = v;
        art.version = 0;
        art.token_count = count_tokens(content);
        store_.write(v, art);
        std::lock_guard<std::mutex> g(mu_);
        artifacts_[art.id] = std::move(art);
        node_ts_.push_back(std::move(nt));
    }

    void unit(const InteractionUnit& u) {
        Artifact in = store_.read(u.edge.src);
        std::string delta;
        if (!cfg_.memory_control) delta = history_delta(actor_id(u.edge.dst), u.edge.src);
        EdgeInteractionResult r = run_unit_impl(dlg_, u, in, assign_, cfg_, delta);
        std::string dialogue;
        if (!cfg_.memory_control) dialogue = refine_dialogue_text(r.transcript);
        std::lock_guard<std::mutex> g(mu_);
        artifacts_[r.refined.id] = r.refined;
        unit_results_[u.edge] = std::move(r.refined);
        if (!cfg_.memory_control) edge_history_[u.edge] = std::move(dialogue);
        edge_ts_.push_back(std::move(r.transcript));
    }

    // Dialogues upstream of src not yet admitted to this actor's context.
    std::string history_delta(const AgentId& aid, NodeId src) {
        auto& st = dlg_.state(aid);
        std::vector<std::string> parts;
        std::lock_guard<std::mutex> g(mu_);
        for (const Edge& ue : upstream_edges_[src]) {
            if (!st.seen_edges.insert(ue).second) continue;
            parts.push_back(edge_history_.at(ue));
        }
        std::string out;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i) out += "\n";
            out += parts[i];
        }
        return out;
    }

    void finalize(NodeId v) {
        std::vector<Artifact> ins;
        {
            std::lock_guard<std::mutex> g(mu_);
            for (const Edge& e : incoming_[v]) ins.push_back(unit_results_.at(e));
        }
        if (ins.size() == 1) {
            store_.write(v, ins[0]);
            return;
        }
        NodeTranscript nt;
        nt.node = v;
        nt.role = LegKind::merge;
        Artifact merged = cfg_.aggregation == AggregationMode::single_call
                              ? merge_single_call(v, ins, nt)
                              : merge_dialogue(v, ins, nt);
        store_.write(v, merged);
        std::lock_guard<std::mutex> g(mu_);
        node_ts_.push_back(std::move(nt));
    }

    Artifact fold_artifact(NodeId v, const std::vector<Artifact>& ins, std::size_t upto,
                           std::string content, std::size_t fold, std::size_t folds) {
        Artifact a;
        a.id = "a:" + std::to_string(v);
        if (fold + 1 < folds) a.id += "#" + std::to_string(fold + 1);
        a.content = std::move(content);
        a.producer = std::nullopt;
        std::uint32_t maxv = 0;
        for (std::size_t i = 0; i <= upto; ++i) {
            maxv = std::max(maxv, ins[i].version);
            a.lineage.push_back(ins[i].id);
        }
        a.version = maxv + 1;
        a.token_count = count_tokens(a.content);
        std::lock_guard<std::mutex> g(mu_);
        artifacts_[a.id] = a;
        return a;
    }

    // Pairwise left fold; each fold is two instruction/draft legs run by the
    // node's actor, instructed by the incoming-edge critics in rotation.
    Artifact merge_dialogue(NodeId v, const std::vector<Artifact>& ins, NodeTranscript& nt) {
        const AgentId aid = actor_id(v);
        const AgentProfile& aprof = assign_.node_actors.at(v);
        const std::string key = "n:" + std::to_string(v);
        const std::vector<Edge>& inc = incoming_[v];
        const std::size_t d = ins.size();
        std::string running = ins[0].content;
        std::uint32_t leg_seq = 0;
        Artifact result;
        for (std::size_t fold = 0; fold + 1 < d; ++fold) {
            const Artifact& B = ins[fold + 1];
            for (int half = 0; half < 2; ++half, ++leg_seq) {
                const Edge ie = inc[leg_seq % d];
                const AgentId iid = critic_id(ie);
                const AgentProfile& iprof = assign_.edge_critics.at(ie);
                std::vector<TraceMessage> reqs;
                dlg_.add_header(iid, iprof, reqs);
                reqs.push_back(Dialogue::req(aid, MessageTag::presentation,
                                             fence_artifact(running)));
                reqs.push_back(Dialogue::req(actor_id(B.producer.value_or(v)),
                                             MessageTag::presentation,
                                             fence_artifact(B.content)));
                std::string directive = dlg_.call(iid, iprof, std::move(reqs),
                                                  MessageTag::instruction, key, LegKind::merge,
                                                  leg_seq, 0, nt.messages);
                LegOutcome lo = dlg_.directed_leg(iid, iprof, aid, aprof, directive, {}, cfg_.m,
                                                  key, LegKind::merge, leg_seq, nt.messages);
                nt.merge_legs += 1;
                nt.merge_pairs += lo.pairs;
                if (auto body = extract_artifact(lo.final_draft)) {
                    running = *body;
                } else {
                    nt.extraction_fallback = true;
                    running = lo.final_draft;
                }
            }
            result = fold_artifact(v, ins, fold + 1, running, fold, d - 1);
        }
        return result;
    }

    Artifact merge_single_call(NodeId v, const std::vector<Artifact>& ins, NodeTranscript& nt) {
        const AgentId aid = actor_id(v);
        const AgentProfile& aprof = assign_.node_actors.at(v);
        const std::string key = "n:" + std::to_string(v);
        const std::size_t d = ins.size();
        std::string running = ins[0].content;
        AgentId running_author = actor_id(ins[0].producer.value_or(v));
        Artifact result;
        for (std::size_t fold = 0; fold + 1 < d; ++fold) {
            const Artifact& B = ins[fold + 1];
            std::vector<TraceMessage> reqs;
            dlg_.add_header(aid, aprof, reqs);
            reqs.push_back(Dialogue::req(running_author, MessageTag::presentation,
                                         fence_artifact(running)));
            reqs.push_back(Dialogue::req(actor_id(B.producer.value_or(v)),
                                         MessageTag::presentation, fence_artifact(B.content)));
            std::string reply =
                dlg_.call(aid, aprof, std::move(reqs), MessageTag::draft, key, LegKind::merge,
                          static_cast<std::uint32_t>(fold), 1, nt.messages);
            if (auto body = extract_artifact(reply)) {
                running = *body;
            } else {
                nt.extraction_fallback = true;
                running = reply;
            }
            running_author = aid;
            nt.merge_pairs += 1;
            result = fold_artifact(v, ins, fold + 1, running, fold, d - 1);
        }
        return result;
    }

    RunTrace assemble(std::chrono::steady_clock::time_point started) {
        RunTrace tr;
        tr.topology = sched_.topology;
        tr.config = cfg_;
        std::sort(edge_ts_.begin(), edge_ts_.end(),
                  [](const EdgeTranscript& a, const EdgeTranscript& b) { return a.edge < b.edge; });
        std::sort(node_ts_.begin(), node_ts_.end(),
                  [](const NodeTranscript& a, const NodeTranscript& b) { return a.node < b.node; });
        tr.edge_transcripts = std::move(edge_ts_);
        tr.node_transcripts = std::move(node_ts_);
        tr.node_artifacts = store_.snapshot();
        tr.artifacts = std::move(artifacts_);
        tr.ledger = std::move(ledger_);
        tr.aborted = aborted_.load();
        tr.error = error_;
        auto sinks = sinks_of(sched_.topology);
        if (sinks.size() == 1 && store_.has(sinks[0])) tr.final_artifact = store_.read(sinks[0]);
        tr.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return tr;
    }

    const Schedule& sched_;
    const AgentAssignment& assign_;
    const RunConfig& cfg_;
    TokenLedger ledger_;
    Dialogue dlg_;
    LongTermStore store_;

    std::mutex mu_;
    std::map<std::string, Artifact> artifacts_;
    std::map<Edge, Artifact> unit_results_;
    std::map<Edge, std::string> edge_history_;
    std::vector<EdgeTranscript> edge_ts_;
    std::vector<NodeTranscript> node_ts_;
    std::vector<std::vector<Edge>> incoming_;
    std::vector<std::vector<Edge>> upstream_edges_;
    std::atomic<bool> aborted_{false};
    std::string error_;

    std::mutex pool_mu_;
    std::condition_variable pool_cv_;
    std::vector<Task> tasks_;
    std::priority_queue<std::pair<std::uint32_t, std::size_t>,
                        std::vector<std::pair<std::uint32_t, std::size_t>>, std::greater<>>
        ready_;
    std::size_t completed_ = 0;
};

}  // namespace

Schedule compute_schedule(const Topology& t, std::uint32_t m) {
    ValidationReport rep = validate(t);
    if (!rep.ok()) {
        for (const Violation& v : rep.violations)
            if (v.kind == Violation::Kind::cycle) throw CycleError(v.nodes);
        throw ConfigError("invalid topology: " + rep.violations.front().detail);
    }

    Schedule s;
    s.topology = t;
    std::vector<std::uint32_t> indeg(t.node_count, 0);
    std::vector<std::vector<NodeId>> out(t.node_count);
    for (const Edge& e : t.edges) {
        indeg[e.dst] += 1;
        out[e.src].push_back(e.dst);  // edges sorted, so dst ascending per src
    }
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> q;
    for (NodeId v = 0; v < t.node_count; ++v)
        if (indeg[v] == 0) q.push(v);
    while (!q.empty()) {
        NodeId v = q.top();
        q.pop();
        s.node_order.push_back(v);
        for (NodeId d : out[v])
            if (--indeg[d] == 0) q.push(d);
    }

    s.node_agent_index.resize(t.node_count, 0);
    std::uint32_t pos = 0;
    for (NodeId v : s.node_order) {
        s.node_agent_index[v] = pos++;
        for (NodeId d : out[v]) {
            InteractionUnit u;
            u.edge = {v, d};
            u.order_index = pos++;
            u.upstream_artifact_sources = parents_of(t, v);
            u.rounds_budget = m;
            s.units.push_back(std::move(u));
        }
    }
    return s;
}

std::uint64_t RunTrace::total_edge_exchange_pairs() const {
    std::uint64_t total = 0;
    for (const auto& et : edge_transcripts) total += et.feedback_pairs + et.refine_pairs;
    return total;
}

EdgeInteractionResult run_edge_interaction(const InteractionUnit& u, const Artifact& artifact_in,
                                           const AgentAssignment& a, Backend& b,
                                           const RunConfig& cfg, TokenLedger* ledger) {
    Dialogue dlg(b, cfg, ledger);
    return run_unit_impl(dlg, u, artifact_in, a, cfg, "");
}

Artifact aggregate_incoming(const std::vector<Artifact>& artifacts, NodeId node, Backend& b) {
    if (artifacts.empty())
        throw std::invalid_argument("aggregate_incoming: need at least one artifact");
    if (artifacts.size() == 1) return artifacts[0];

    Artifact running = artifacts[0];
    for (std::size_t fold = 0; fold + 1 < artifacts.size(); ++fold) {
        const Artifact& B = artifacts[fold + 1];
        std::vector<ChatMessage> messages{{"user", fence_artifact(running.content)},
                                          {"user", fence_artifact(B.content)}};
        CompletionResult res = b.complete(messages, 0.2, 0, {"aggregator", false});
        Artifact merged;
        merged.id = "a:" + std::to_string(node);
        if (fold + 2 < artifacts.size()) merged.id += "#" + std::to_string(fold + 1);
        merged.content = extract_artifact(res.text).value_or(res.text);
        merged.producer = std::nullopt;
        std::uint32_t maxv = 0;
        for (std::size_t i = 0; i <= fold + 1; ++i) {
            maxv = std::max(maxv, artifacts[i].version);
            merged.lineage.push_back(artifacts[i].id);
        }
        merged.version = maxv + 1;
        merged.token_count = count_tokens(merged.content);
        running = std::move(merged);
    }
    return running;
}

RunTrace execute(const Schedule& s, const AgentAssignment& a, Backend& b, const RunConfig& cfg) {
    auto sinks = sinks_of(s.topology);
    if (sinks.size() != 1)
        throw ConfigError("execute needs exactly one sink; apply append_final_sink first");
    Runner runner(s, a, b, cfg);
    return runner.run();
}

}  // namespace agentnet
