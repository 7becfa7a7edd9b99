"""
仿真服务 API 路由

本文件暴露网络预设查询、小规模实验试算与单次两阶段迭代接口。
"""
from __future__ import annotations

import asyncio
import math
from typing import List

from fastapi import APIRouter, HTTPException

from igsbpo import run

from .config import NETWORK_PRESETS, get_preset
from .models import (
    ErrorResponse,
    ExperimentRequest,
    ExperimentResponse,
    ExperimentSpec,
    IgsbpoRequest,
    IgsbpoResponse,
    PresetSummary,
    TracePoint,
)
from .services import generate_channels, run_experiment_async

router = APIRouter()


#
# GET /api/presets
# 说明：返回全部已加载的网络预设概要
#
@router.get("/api/presets", response_model=List[PresetSummary])
async def presets_endpoint() -> List[PresetSummary]:
    summaries = []
    for name, preset in sorted(NETWORK_PRESETS.items()):
        cfg = preset.to_config()
        summaries.append(
            PresetSummary(name=name, description=preset.description, num_bs=cfg.num_bs,
                          num_wireline=cfg.num_wireline, num_users=cfg.num_users)
        )
    return summaries


#
# POST /api/experiments
# 说明：
#   - 请求体：预设名、SINR 目标列表、实现数（≤ 20）、种子、算法列表
#   - 返回每个单元的结果行与均值行，不写文件
#   - 未知预设或参数非法返回 404/400，求解过程异常返回 502
#
@router.post(
    "/api/experiments",
    response_model=ExperimentResponse,
    responses={404: {"model": ErrorResponse}, 400: {"model": ErrorResponse}},
)
async def experiments_endpoint(payload: ExperimentRequest) -> ExperimentResponse:
    try:
        get_preset(payload.preset)
    except ValueError as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    try:
        spec = ExperimentSpec(
            preset=payload.preset,
            targets_db=payload.targets_db,
            realizations=payload.realizations,
            seed=payload.seed,
            algorithms=payload.algorithms,
            baseline_mode=payload.baseline_mode,
            workers=1,
        )
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    try:
        result = await run_experiment_async(spec)
    except RuntimeError as exc:
        raise HTTPException(status_code=502, detail=str(exc))
    return ExperimentResponse(means=result.means, rows=result.rows)


def _finite(value: float):
    return value if math.isfinite(value) else None


#
# POST /api/igsbpo
# 说明：在一个信道实现上运行完整的两阶段迭代，返回功耗、活跃集与迭代轨迹
#
@router.post(
    "/api/igsbpo",
    response_model=IgsbpoResponse,
    responses={404: {"model": ErrorResponse}},
)
async def igsbpo_endpoint(payload: IgsbpoRequest) -> IgsbpoResponse:
    try:
        cfg = get_preset(payload.preset).to_config(payload.target_db)
    except ValueError as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    try:
        ch = generate_channels(cfg, payload.seed)
        result = await asyncio.to_thread(run, cfg, ch, payload.iteration)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    except RuntimeError as exc:
        raise HTTPException(status_code=502, detail=str(exc))
    return IgsbpoResponse(
        feasible=result.feasible,
        stop_reason=result.stop_reason.value,
        network_power=_finite(result.network_power),
        total_tx_power=_finite(result.total_tx_power) if result.feasible else None,
        active_set=list(result.active_set),
        iterations=result.iterations,
        trace=[
            TracePoint(iteration=e.iteration, network_power=_finite(e.network_power),
                       active_set=list(e.active_set), feasible=e.feasible)
            for e in result.trace.entries
        ],
    )
