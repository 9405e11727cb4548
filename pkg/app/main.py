from app.tasks.cli import main, run

__all__ = ["main", "run"]


if __name__ == "__main__":
    main()
