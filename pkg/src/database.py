"""
Database Module - Run ledger for CLI invocations using SQLAlchemy
Stores each run's configuration and serialized report so it can be listed and replayed
"""
import json
from datetime import datetime
from typing import Optional, List

from sqlalchemy import create_engine, Column, Integer, String, Text, DateTime
from sqlalchemy.orm import declarative_base, sessionmaker, Session

from config import LEDGER_PATH

Base = declarative_base()


class Run(Base):
    """One CLI invocation: its RunConfig, JSON payload and exit code"""
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String(32), nullable=False, index=True)
    schema = Column(String(64), nullable=False)
    seed = Column(Integer, nullable=False)
    config_json = Column(Text, nullable=False)
    payload_json = Column(Text, nullable=False)
    exit_code = Column(Integer, nullable=False)
    created_at = Column(DateTime, default=datetime.utcnow)

    @property
    def config(self) -> dict:
        return json.loads(self.config_json)


class DatabaseManager:
    """Manages the ledger database"""

    def __init__(self, db_path: str = 'oslocal_runs.db'):
        """Initialize database connection"""
        self.engine = create_engine(f'sqlite:///{db_path}', echo=False)
        Base.metadata.create_all(self.engine)
        self.SessionLocal = sessionmaker(bind=self.engine)

    def get_session(self) -> Session:
        """Get a new database session"""
        return self.SessionLocal()

    def record_run(self, command: str, schema: str, seed: int, config: dict,
                   payload: str, exit_code: int) -> Run:
        """
        Store a finished run

        Args:
            command: CLI command name
            schema: report schema tag
            seed: master seed of the run
            config: RunConfig as a dict
            payload: serialized JSON report, byte for byte
            exit_code: process exit code

        Returns:
            Created Run object
        """
        session = self.get_session()
        try:
            run = Run(
                command=command,
                schema=schema,
                seed=seed,
                config_json=json.dumps(config, sort_keys=True),
                payload_json=payload,
                exit_code=exit_code,
            )
            session.add(run)
            session.commit()
            session.refresh(run)
            return run
        finally:
            session.close()

    def get_run(self, run_id: int) -> Optional[Run]:
        """Get a run by id"""
        session = self.get_session()
        try:
            return session.query(Run).filter(Run.id == run_id).first()
        finally:
            session.close()

    def list_runs(self, command: Optional[str] = None, limit: int = 20) -> List[Run]:
        """Most recent runs first, optionally for one command"""
        session = self.get_session()
        try:
            query = session.query(Run)
            if command:
                query = query.filter(Run.command == command)
            return query.order_by(Run.id.desc()).limit(limit).all()
        finally:
            session.close()


db_manager = DatabaseManager(LEDGER_PATH) if LEDGER_PATH else None
