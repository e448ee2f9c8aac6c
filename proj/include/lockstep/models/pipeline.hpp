#pragma once

#include "lockstep/model.hpp"

#include <cstdint>
#include <deque>
#include <vector>

namespace lockstep::models {

enum class DependencyMode : std::uint8_t {
    none,   // no source operands
    serial, // every instruction reads the previous instruction's destination
    random, // each source operand present with dependency_permille
};

struct PipelineParams {
    std::size_t exec_units = 2;
    std::size_t window = 8;
    std::uint32_t exec_latency = 1; // k-cycle op = 1 work cycle + port delay k to writeback
    DependencyMode dependencies = DependencyMode::random;
    std::uint32_t dependency_permille = 300;
    std::uint32_t blocking_permille = 0; // instructions that stall their exec unit
    std::uint32_t stall_cycles = 4;
    std::uint32_t registers = 16;
    std::uint64_t instructions = 0; // 0: unbounded stream
    bool record_logs = false;
};

inline constexpr std::uint8_t kNoRegister = 0xFF;

struct Instruction {
    std::uint64_t seq = 0;
    std::uint8_t dst = kNoRegister;
    std::uint8_t src0 = kNoRegister;
    std::uint8_t src1 = kNoRegister;
    std::uint8_t blocking = 0;
};

/// Stall status of an exec unit for the cycle in which the message becomes visible.
struct BackPressure {
    std::uint8_t stalled = 0;
};

class FrontEnd;
class Dispatch;
class ExecUnit;
class Writeback;

struct IssueRecord {
    Cycle cycle;
    std::size_t exec;
    std::uint64_t seq;
};

struct BackPressureRecord {
    Cycle cycle; // cycle in which dispatch read it
    std::size_t exec;
    bool stalled;
};

struct StallWindow {
    Cycle first; // first cycle in which the exec unit does not accept input
    Cycle last;
};

struct CommitRecord {
    Cycle cycle;
    std::uint64_t seq;
};

/// Emits up to `exec_units` instructions per cycle, one per fetch lane, and
/// only when every lane is vacant so that program order survives transfer.
class FrontEnd final : public Unit {
public:
    explicit FrontEnd(const PipelineParams& params) : params_(params) {}
    void work(UnitContext& ctx) override;

    std::vector<OutPortId> lanes;
    std::uint64_t fetched() const noexcept { return next_seq_; }

private:
    Instruction generate(UnitContext& ctx);

    PipelineParams params_;
    std::uint64_t next_seq_ = 0;
    std::uint8_t last_dst_ = kNoRegister;
};

/// In-order dispatch stage with a pending-instruction window and a register
/// scoreboard. Honors explicit back-pressure from every exec unit.
class Dispatch final : public Unit {
public:
    explicit Dispatch(const PipelineParams& params);
    void work(UnitContext& ctx) override;

    std::vector<InPortId> lanes;
    std::vector<InPortId> back_pressure;
    std::vector<OutPortId> issue;

    const std::vector<IssueRecord>& issues() const noexcept { return issues_; }
    const std::vector<BackPressureRecord>& back_pressure_log() const noexcept { return bp_log_; }
    std::uint64_t issued() const noexcept { return issued_; }

private:
    bool ready(const Instruction& instr, Cycle cycle) const noexcept;

    PipelineParams params_;
    std::deque<MessageHandle> window_;
    std::vector<Cycle> register_ready_;
    std::vector<bool> stalled_;
    std::vector<bool> available_;
    std::uint64_t issued_ = 0;
    std::vector<IssueRecord> issues_;
    std::vector<BackPressureRecord> bp_log_;
};

/// Pipelined functional unit. A blocking instruction started at cycle c
/// keeps the unit from accepting input during [c+1, c+stall_cycles]; the stall
/// and the resume are announced one cycle ahead on the back-pressure port.
class ExecUnit final : public Unit {
public:
    explicit ExecUnit(const PipelineParams& params) : params_(params) {}
    void work(UnitContext& ctx) override;

    InPortId input;
    OutPortId result;
    OutPortId back_pressure;

    const std::vector<StallWindow>& stalls() const noexcept { return stalls_; }
    std::uint64_t executed() const noexcept { return executed_; }

private:
    PipelineParams params_;
    bool stalling_ = false;
    Cycle stall_end_ = 0;
    std::uint64_t executed_ = 0;
    std::vector<StallWindow> stalls_;
};

class Writeback final : public Unit {
public:
    explicit Writeback(const PipelineParams& params) : params_(params) {}
    void work(UnitContext& ctx) override;

    std::vector<InPortId> results;

    std::uint64_t committed() const noexcept { return committed_; }
    const std::vector<CommitRecord>& commits() const noexcept { return commits_; }

private:
    PipelineParams params_;
    std::uint64_t committed_ = 0;
    std::vector<CommitRecord> commits_;
};

struct PipelineModel {
    Model model;
    PipelineParams params;
    FrontEnd* front_end = nullptr;
    Dispatch* dispatch = nullptr;
    std::vector<ExecUnit*> execs{};
    Writeback* writeback = nullptr;

    std::uint64_t committed() const noexcept { return writeback->committed(); }
};

/// Units in id order: front-end, dispatch, exec 0..E-1, writeback.
/// Throws ModelError when exec_units is 0 or the window cannot hold one fetch group.
PipelineModel build_pipeline(const PipelineParams& params, std::uint64_t seed);

} // namespace lockstep::models
