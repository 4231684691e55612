"""pmkit HTTP API -- next preventive maintenance plans for wind farms."""

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

import pmkit.startup  # noqa: F401  # pyright: ignore[reportUnusedImport]
from pmkit.planner import routes as plan_routes
from pmkit.system import routes as system_routes

app = FastAPI(title="pmkit")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(system_routes.router, tags=["System"])
app.include_router(plan_routes.router, prefix="/plans", tags=["Plans"])
